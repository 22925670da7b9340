from model.firm import *
