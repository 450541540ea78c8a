from typing import Dict, List

from ptchain.config import RunConfig
from ptchain.errors import ConfigError, PTChainError
from ptchain.model import NoPerturbation, PerturbationSpec
from utils.logger import log_error, log_info


class AnalysisStage:
    """One analysis of a run: compute, write its CSV, report a result dict.

    Subclasses implement `compute(config)` and return at least an "outputs"
    list; library errors become {"success": False, "error": ...} here.
    """

    name = "analysis"

    def execute(self, config: RunConfig) -> Dict:
        log_info(f"📊 {type(self).__name__}: starting {self.name}...")
        try:
            result = self.compute(config)
        except PTChainError as e:
            log_error(f"❌ {type(self).__name__} execution error: {e}")
            return {"success": False, "error": str(e), "error_type": type(e).__name__, "outputs": []}
        result.setdefault("success", True)
        result.setdefault("error", None)
        result.setdefault("outputs", [])
        return result

    def compute(self, config: RunConfig) -> Dict:
        raise NotImplementedError

    @staticmethod
    def require(config: RunConfig, *keys: str) -> None:
        for key in keys:
            if getattr(config, key) is None:
                raise ConfigError(f"{key}: required for analysis '{config.analysis.value}'", key=key, expected="value")

    @staticmethod
    def single_perturbation(config: RunConfig, allow_none: bool = True) -> PerturbationSpec:
        perts = config.perturbations()
        if len(perts) != 1:
            raise ConfigError(f"pert: analysis '{config.analysis.value}' takes one perturbation, not a batch",
                              key="pert", expected="single perturbation")
        if not allow_none and isinstance(perts[0], NoPerturbation):
            raise ConfigError(f"pert: analysis '{config.analysis.value}' needs a perturbation",
                              key="pert", expected="perturbation object")
        return perts[0]

    @staticmethod
    def perturbed(config: RunConfig) -> List[PerturbationSpec]:
        perts = [p for p in config.perturbations() if not isinstance(p, NoPerturbation)]
        if not perts:
            raise ConfigError(f"pert: analysis '{config.analysis.value}' needs a perturbation",
                              key="pert", expected="perturbation object")
        return perts
