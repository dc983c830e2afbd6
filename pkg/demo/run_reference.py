import numpy as np
from riskstop import runstop
from riskstop.config import RunConfig
import json

# Reference problem: exponential interarrivals and claim sizes,
# saturating utility, three claims
with open('../data/configs/reference.json','r') as ff:
    indoc = json.load(ff)

# coarser grid and fewer paths for a quick desk run
indoc['solver']['M'] = 50
indoc['solver']['L'] = 50
indoc['run']['n_paths'] = 100000
indoc['run']['out'] = 'RSoutput/reference'

# switch to 'as_printed' to see the alternative refused-claim term
indoc['solver']['mode'] = 'consistent'

cfg = RunConfig.from_document(indoc)

# Init the driver
RS = runstop.RunStop(verbose=True)

# DP value against the Monte Carlo value of the DP rule
report = RS.compare(cfg)

print('gamma_K(a,0) = {0:.8f}'.format(report['dp_value']))
print('MC           = {0:.8f} +/- {1:.8f}'.format(report['mc_mean'],report['mc_standard_error']))
print('baselines    = {0}'.format(
    ', '.join(['{0}: {1:.6f}'.format(k,v['mean']) for k,v in report['baselines'].items()])))

# headline as a function of the acceptance probability
sweep = RS.sweep(cfg,sweep={'axes':{'model.p':list(np.linspace(0.0,1.0,5))}})
for row in sweep['rows']:
    print('p = {0:.2f} -> {1:.8f}'.format(row['model.p'],row['value']))
