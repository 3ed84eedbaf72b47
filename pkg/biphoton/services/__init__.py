# Services package for the biphoton app
