from typing import Dict

import numpy as np

from analyses.base import AnalysisStage
from ptchain.config import RunConfig
from ptchain.errors import ConfigError
from ptchain.model import SingleSite, describe
from ptchain.pt import PhaseGrid, phase_grid_gamma_hz, phase_grid_single_site
from utils.logger import log_info, log_success
from utils.outputs import phase_frame, save_csv


class PhaseDiagramAnalysis(AnalysisStage):
    """max Im(E) on a 2-D grid.

    With gp_grid and gm_grid the plane is (gamma+, gamma-) for a single site
    (`site`, or the site of a single_site pert); otherwise it is (gamma, h_z)
    for the configured perturbation.
    """

    name = "phase diagram"

    def compute(self, config: RunConfig) -> Dict:
        chain = config.chain()
        if config.gp_grid is not None or config.gm_grid is not None:
            self.require(config, "gp_grid", "gm_grid")
            site = config.site
            if site is None:
                pert = self.single_perturbation(config, allow_none=False)
                if not isinstance(pert, SingleSite):
                    raise ConfigError("site: the (gamma+, gamma-) plane needs `site` or a single_site pert",
                                      key="site", expected="int")
                site = pert.p
            log_info(f"🗺️  (gamma+, gamma-) plane at site {site}: {len(config.gm_grid)} x {len(config.gp_grid)}")
            grid = phase_grid_single_site(chain, site, config.gp_grid, config.gm_grid,
                                          config.snap_tol, config.solver, config.jobs)
            label = f"single_site(p={site})"
        else:
            self.require(config, "gamma_grid", "hz_grid")
            pert = self.single_perturbation(config, allow_none=False)
            log_info(f"🗺️  (gamma, h_z) plane for {describe(pert)}: {len(config.hz_grid)} x {len(config.gamma_grid)}")
            grid = phase_grid_gamma_hz(chain, pert, config.gamma_grid, config.hz_grid,
                                       config.snap_tol, config.solver, config.jobs)
            label = describe(pert)

        path = save_csv(phase_frame(grid.x_axis, grid.y_axis, grid.max_im, config.J), config.output_dir, "phase.csv")
        log_success(f"Phase grid computed: {grid.max_im.size} cells")
        return {
            "outputs": [path],
            "grid": grid,
            "iterations": grid.iterations,
            "summary": self.summarize(grid, label),
        }

    @staticmethod
    def summarize(grid: PhaseGrid, label: str) -> Dict:
        return {
            "perturbation": label,
            "x": grid.x_label,
            "y": grid.y_label,
            "cells": int(grid.max_im.size),
            "broken_cells": int(np.count_nonzero(grid.max_im > 0)),
            "max_imag": float(grid.max_im.max()),
        }
