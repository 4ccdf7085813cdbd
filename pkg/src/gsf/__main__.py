from gsf.cli import main

raise SystemExit(main())
