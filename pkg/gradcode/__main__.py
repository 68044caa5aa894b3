from gradcode.main import main

main()
