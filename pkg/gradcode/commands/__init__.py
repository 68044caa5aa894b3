from gradcode.commands import bounds, construct, curve, decode, example1, failprob, train

COMMANDS = (construct, decode, bounds, failprob, curve, train, example1)
