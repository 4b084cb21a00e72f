import importlib.util

# the toolkit suite must run standalone; only collect the trainer's tests
# when that package is actually installed
collect_ignore = []
if importlib.util.find_spec("trigrasp_trainer") is None:
    collect_ignore.append("trainer")
