from vorpatch.cli import main

main()
