# Empty file to make directories packages