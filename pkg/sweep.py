"""Dev scratch: sweep bundled MDPs against published profile targets."""
import sys
sys.path.insert(0, "src")

from appraise_rl.assets_io import BUNDLED_EMOTIONS, load_mdp
from appraise_rl.qlearn import Hyperparams, derive_seed, train
from appraise_rl.appraisal import appraise

TARGETS = {
    "happiness": (0.0, 0.67, 0.83, 0.95),
    "joy": (0.8, 1.0, 1.0, 0.0),
    "pride": (0.5, 1.0, 1.0, 0.1),
    "boredom": (0.0, 0.0, 0.5, 0.6),
    "fear": (0.8, 1.0, 0.0, 0.0),
    "sadness": (0.2, 1.0, 0.0, 0.0),
    "shame": (0.79, 1.0, 0.0, 0.5),
    "anxiety": (0.2, 1.0, 0.0, 0.0),
    "despair": (0.81, 1.0, 0.0, 0.0),
    "irritation": (0.2, 1.0, 0.0, 0.53),
    "rage": (0.8, 1.0, 0.0, 0.6),
}
TOL = (0.05, 0.15, 0.10, 0.15)

master = int(sys.argv[1]) if len(sys.argv) > 1 else 0
all_ok = True
for emo in BUNDLED_EMOTIONS:
    spec = load_mdp(emo)
    hyper = Hyperparams(seed=derive_seed(master, emo))
    agent = train(spec, hyper)
    vec = appraise(agent, spec).as_tuple()
    tgt = TARGETS[emo]
    flags = []
    for name, v, t, tol in zip("s g c p".split(), vec, tgt, TOL):
        ok = abs(v - t) <= tol
        all_ok &= ok
        flags.append(f"{name}={v:+.3f}({t:+.2f}){'' if ok else ' **MISS**'}")
    print(f"{emo:<11} {'  '.join(flags)}")
print("ALL OK" if all_ok else "SOME MISS", "| master seed", master)
