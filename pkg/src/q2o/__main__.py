from q2o.cli import run

run()
