from tsgd.cli import main

raise SystemExit(main())
