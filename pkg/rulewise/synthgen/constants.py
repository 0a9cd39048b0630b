FUNCTION_KINDS = ('constant', 'linear', 'threshold', 'interaction')
COVARIATE_LAWS = ('uniform', 'normal', 'binary')
ASSIGNMENTS = ('randomized', 'logistic')
EVENT_LAWS = ('gaussian', 'exponential')
TABLE_REWARDS = ('risk', 'days')

MIN_MC_DRAWS = 10_000
CALIBRATION_DRAWS = 20_000
