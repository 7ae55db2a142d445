"""Dev scratch: measure SVM timing and the precision-vs-c curve."""
import sys, time
sys.path.insert(0, "src")
import numpy as np

from appraise_rl.scherer import AppraisalSampler, EXPERIMENT_EMOTIONS, load_patterns
from appraise_rl.svm import (
    CorpusMatrix, train_svm, predict_intensities, model_precision, smo_solve,
)
from appraise_rl.appraisal import AppraisalVector

# measured appraisal profiles (close to published) as calibration targets
PROFILES = {
    "happiness": (0.0, 0.61, 0.80, 0.96),
    "joy": (0.8, 1.0, 1.0, 0.0),
    "pride": (0.48, 1.0, 1.0, 0.0),
    "boredom": (0.0, 0.0, 0.5, 0.6),
    "fear": (0.81, 1.0, 0.0, 0.0),
    "sadness": (0.2, 1.0, 0.0, 0.0),
    "shame": (0.81, 1.0, 0.0, 0.5),
}

sampler = AppraisalSampler()
rng = np.random.default_rng(7)
corpus = sampler.build_corpus(EXPERIMENT_EMOTIONS["exp1"], 500, rng)
mat = CorpusMatrix(corpus)
print("gamma:", mat.gamma, "n:", len(corpus))

targets = [(AppraisalVector(*v), e) for e, v in PROFILES.items()]

t0 = time.time()
m = train_svm(mat, 1.0, seed=0)
t1 = time.time()
print(f"train c=1: {t1-t0:.2f}s; converged={m.converged}")
# held-out accuracy on fresh draws
test = sampler.build_corpus(EXPERIMENT_EMOTIONS["exp1"], 40, np.random.default_rng(123))
acc = np.mean([
    predict_intensities(m, s.vector).argmax() == s.label for s in test
])
print("held-out top-1 acc at c=1:", acc)

for c in [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0, 3.0, 10.0]:
    t0 = time.time()
    model = train_svm(mat, c, seed=0)
    prec = model_precision(model, targets)
    print(f"c={c:<8g} precision={prec:.4f}  ({time.time()-t0:.2f}s)")
