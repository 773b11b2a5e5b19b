from singstab.cli import run

run()
