# Utils package for the biphoton app
