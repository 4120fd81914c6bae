from polytail.cli import main

main()
