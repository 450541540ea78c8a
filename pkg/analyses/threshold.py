from collections import Counter
from typing import Dict, List

from analyses.base import AnalysisStage
from ptchain.config import RunConfig
from ptchain.model import PerturbationSpec, SingleSite, describe
from ptchain.pt import ThresholdResult, find_threshold, parallel_map
from utils.logger import log_info, log_success, log_warning
from utils.outputs import save_csv, threshold_frame


def _search(chain, pert, kwargs) -> ThresholdResult:
    return find_threshold(chain, pert, **kwargs)


def threshold_record(pert: PerturbationSpec, result: ThresholdResult) -> Dict:
    return {
        'p': pert.p,
        'q': None if isinstance(pert, SingleSite) else pert.q,
        'class': result.classification.value,
        'gamma_pt': result.gamma_pt,
        'bracket_lo': result.bracket[0] if result.found else None,
        'bracket_hi': result.bracket[1] if result.found else None,
        'evaluations': result.evaluations,
    }


class ThresholdAnalysis(AnalysisStage):
    """PT threshold for every requested perturbation (one row per (p, q))"""

    name = "threshold"

    def compute(self, config: RunConfig) -> Dict:
        chain = config.chain()
        perts = self.perturbed(config)
        kwargs = config.threshold_settings().as_kwargs()
        log_info(f"🔍 Searching thresholds for {len(perts)} perturbation(s) on N={chain.n_sites}, {chain.boundary.value}")

        results: List[ThresholdResult] = parallel_map(_search, [(chain, pert, kwargs) for pert in perts], config.jobs)
        records = [threshold_record(pert, r) for pert, r in zip(perts, results)]
        for pert, r in zip(perts, results):
            shown = "none" if r.gamma_pt is None else f"{r.gamma_pt:.6g}"
            log_info(f"   {describe(pert)} [{r.classification.value}]: gamma_pt={shown}")
            if r.reentrant:
                log_warning(f"⚠️  {describe(pert)}: re-entrant broken set, first breaking reported")

        path = save_csv(threshold_frame(records, config.J), config.output_dir, "threshold.csv")
        by_class = Counter(r.classification.value for r in results)
        log_success(f"Thresholds computed for {len(results)} perturbation(s)")
        return {
            "outputs": [path],
            "evaluations": sum(r.evaluations for r in results),
            "iterations": sum(r.iterations for r in results),
            "records": records,
            "summary": {
                "perturbations": len(results),
                "by_class": dict(by_class),
                "no_threshold": sum(1 for r in results if not r.found),
                "reentrant": [describe(p) for p, r in zip(perts, results) if r.reentrant],
            },
        }
