from typing import Dict

import numpy as np

from analyses.base import AnalysisStage
from ptchain.config import RunConfig
from ptchain.errors import ConfigError
from ptchain.model import NoPerturbation, PerturbationSpec, SingleSite, describe
from ptchain.pt import max_imag, spectrum_at
from utils.logger import log_info, log_success
from utils.outputs import save_csv, spectrum_frame


def strength(config: RunConfig, pert: PerturbationSpec) -> float:
    """gamma for the spectrum; a single_site pert alone already carries its strengths"""
    if config.gamma is not None:
        return config.gamma
    if isinstance(pert, SingleSite):
        return 1.0
    if isinstance(pert, NoPerturbation):
        return 0.0
    raise ConfigError(f"gamma: {describe(pert)} needs a strength for analysis 'spectrum'",
                      key="gamma", expected="float >= 0")


class SpectrumAnalysis(AnalysisStage):
    """Full spectrum of one Hamiltonian at a fixed strength"""

    name = "spectrum"

    def compute(self, config: RunConfig) -> Dict:
        chain = config.chain()
        pert = self.single_perturbation(config)
        gamma = strength(config, pert)
        s = spectrum_at(chain, pert, gamma, config.solver)

        snapped = max_imag(s, config.snap_tol)
        n_complex = int(np.count_nonzero(np.abs(s.imag) > config.snap_tol * s.scale))
        log_info(f"🔢 {describe(pert)} at gamma={gamma:g}: dim={len(s)}, complex={n_complex}")

        path = save_csv(spectrum_frame(s.eigenvalues, config.J), config.output_dir, "spectrum.csv")
        log_success(f"Spectrum computed: max Im(E) = {snapped:.6g}")
        return {
            "outputs": [path],
            "iterations": s.iterations,
            "summary": {
                "perturbation": describe(pert),
                "gamma": gamma,
                "dim": len(s),
                "max_imag": snapped,
                "complex_eigenvalues": n_complex,
                "max_residual": s.max_residual,
            },
        }
