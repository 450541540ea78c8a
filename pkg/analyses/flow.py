from typing import Dict

from analyses.base import AnalysisStage
from ptchain.config import RunConfig
from ptchain.model import describe
from ptchain.pt import count_flat_eigenvalues, first_broken_index, flow_sweep
from utils.logger import log_info, log_success
from utils.outputs import flow_frame, save_csv


class FlowAnalysis(AnalysisStage):
    """Eigenvalue flow E(gamma) across a strength grid"""

    name = "flow"

    def compute(self, config: RunConfig) -> Dict:
        self.require(config, "gamma_grid")
        chain = config.chain()
        pert = self.single_perturbation(config)
        flow = flow_sweep(chain, pert, config.gamma_grid, config.solver, config.jobs)

        first = first_broken_index(flow, config.snap_tol)
        flat = count_flat_eigenvalues(flow, config.snap_tol)
        max_im = float(flow.max_imag_per_row(config.snap_tol).max())
        if first is None:
            log_info(f"📈 {describe(pert)}: spectrum stays real over the whole grid")
        else:
            lo = flow.gamma_grid[first - 1] if first > 0 else flow.gamma_grid[0]
            log_info(f"📈 {describe(pert)}: first complex pair between gamma={lo:g} and {flow.gamma_grid[first]:g}")

        path = save_csv(flow_frame(flow.gamma_grid, flow.rows, config.J), config.output_dir, "flow.csv")
        log_success(f"Flow computed: {len(flow.gamma_grid)} strengths x {flow.rows.shape[1]} eigenvalues")
        return {
            "outputs": [path],
            "iterations": flow.iterations,
            "summary": {
                "perturbation": describe(pert),
                "grid_points": len(flow.gamma_grid),
                "eigenvalues_per_row": int(flow.rows.shape[1]),
                "first_broken_gamma": None if first is None else float(flow.gamma_grid[first]),
                "flat_eigenvalues": flat,
                "max_imag": max_im,
            },
        }
