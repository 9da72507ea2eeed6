"""One representative invocation per CLI subcommand."""
from pathlib import Path

WEIGHTS = Path(__file__).resolve().parent.parent / "data" / "weights"


def w(name):
    return str(WEIGHTS / f"{name}.json")


CASES = {
    "eigen": ["eigen", "--weight", w("bump"), "--dim", "3", "--lmax", "2"],
    "classify": ["classify", "--weight", w("counterexample"), "--dim", "3", "--lmax", "1"],
    "periodic": ["periodic", "--weight", w("square_wave"), "--dim", "3", "--gamma", "2"],
    "nullseq": ["nullseq", "--weight", w("square_wave"), "--dim", "3", "--gamma", "2",
                "--k-list", "16,64"],
    "sigma": ["sigma", "--weight", w("zero"), "--weight2", w("constant"), "--dim", "3",
              "--lambda-grid", "0.05,0.1,0.2"],
    "threshold": ["threshold", "--weight", w("canonical_bump"), "--dim", "3", "--m0", "2",
                  "--tmin", "-20", "--tmax", "20", "--n", "4001"],
    "ballbound": ["ballbound", "--dim", "3", "--r", "1", "--d", "2", "--m-peak", "100",
                  "--m0", "1", "--minf", "1"],
    "decay": ["decay", "--weight", w("bump"), "--dim", "3"],
    "oracle": ["oracle", "--weight", w("bump"), "--dim", "3", "--tmin", "-5", "--tmax", "5"],
}
