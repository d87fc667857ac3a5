"""Small shared result containers."""

from dataclasses import dataclass


@dataclass(frozen=True)
class EstimateWithUncertainty:
    """Scalar estimate, its epistemic variance, and the sample count used."""

    estimate: float
    epistemic_variance: float
    n_samples: int

    def to_dict(self):
        return {
            "estimate": self.estimate,
            "epistemic_variance": self.epistemic_variance,
            "n_samples": self.n_samples,
        }
