from cigarflow.cli import console_main

console_main()
