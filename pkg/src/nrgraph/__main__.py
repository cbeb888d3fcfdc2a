from nrgraph.cli import main

raise SystemExit(main())
