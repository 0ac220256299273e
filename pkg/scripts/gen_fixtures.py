"""Regenerate the checked-in bundle fixtures under tests/fixtures/bundles.

Three clean seed bundles (one per architecture kind) plus one library-skew
mutant of the MLP seed used by the CLI tests. Rerunning is deterministic and
overwrites in place.
"""

from pathlib import Path
import shutil

from fldeep import synth
from fldeep.bundle import serialize_bundle
from fldeep.harness import mutate

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "bundles"


def write(bundle) -> None:
    target = OUT / bundle.bundle_id
    if target.exists():
        shutil.rmtree(target)
    serialize_bundle(bundle, OUT)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    seeds = {}
    for i, kind in enumerate(synth.BUNDLE_KINDS):
        b = synth.make_bundle(kind, f"clean_{kind}", 42 + i)
        write(b)
        seeds[kind] = b
    write(mutate(seeds["mlp"], "M-LIB", seed=100).mutant)
    print(f"wrote {sum(1 for _ in OUT.iterdir())} bundles under {OUT}")


if __name__ == "__main__":
    main()
