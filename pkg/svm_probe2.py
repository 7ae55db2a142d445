"""Dev scratch: per-target intensity breakdown near the curve peak."""
import sys
sys.path.insert(0, "src")
import numpy as np

from appraise_rl.scherer import AppraisalSampler, EXPERIMENT_EMOTIONS
from appraise_rl.svm import CorpusMatrix, train_svm, predict_intensities
from appraise_rl.appraisal import AppraisalVector

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
corpus = sampler.build_corpus(EXPERIMENT_EMOTIONS["exp1"], 500, np.random.default_rng(7))
mat = CorpusMatrix(corpus)
for c in (0.03, 0.1):
    model = train_svm(mat, c, seed=0)
    print(f"--- c={c}")
    total = 0.0
    for emo, v in PROFILES.items():
        dist = predict_intensities(model, AppraisalVector(*v))
        tgt = dist.intensity[emo]
        total += tgt
        top = sorted(dist.intensity.items(), key=lambda kv: -kv[1])[:3]
        print(f"{emo:<10} target={tgt:.3f} top3={[(e, round(p,3)) for e,p in top]}")
    print("mean precision:", total / len(PROFILES))
