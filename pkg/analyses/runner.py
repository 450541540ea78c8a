import json
import time
from typing import Dict

from analyses.coupling_sweep import CouplingSweepAnalysis
from analyses.field_response import FieldResponseAnalysis
from analyses.flow import FlowAnalysis
from analyses.phase_diagram import PhaseDiagramAnalysis
from analyses.spectrum import SpectrumAnalysis
from analyses.threshold import ThresholdAnalysis
from analyses.validate import ValidateAnalysis
from ptchain import __version__
from ptchain.config import Analysis, RunConfig, serialize_config
from utils.logger import log_debug, log_error, log_step, log_success
from utils.outputs import save_manifest

STAGES = {
    Analysis.SPECTRUM: SpectrumAnalysis,
    Analysis.THRESHOLD: ThresholdAnalysis,
    Analysis.FLOW: FlowAnalysis,
    Analysis.PHASE_GRID: PhaseDiagramAnalysis,
    Analysis.FIELD_RESPONSE: FieldResponseAnalysis,
    Analysis.COUPLING_SWEEP: CouplingSweepAnalysis,
    Analysis.VALIDATE: ValidateAnalysis,
}


def run(config: RunConfig) -> Dict:
    """Run the configured analysis, write its CSV and the JSON run manifest.

    The returned dict carries "success", "error", "error_type", "outputs" and
    "manifest" plus whatever the stage reported.
    """
    stage = STAGES[config.analysis]()
    log_step(f"PTCHAIN {stage.name.upper()}")
    start_time = time.time()
    result = stage.execute(config)
    duration = time.time() - start_time
    log_debug(f"🔁 {stage.name}: {result.get('iterations', 0)} QR iterations, "
              f"{result.get('evaluations', 0)} breaking checks ({config.solver})")

    manifest = {
        'analysis': config.analysis.value,
        'success': result['success'],
        'error': result.get('error'),
        'wall_time_s': round(duration, 3),
        'config': json.loads(serialize_config(config)),
        'solver': config.solver,
        'solver_iterations': result.get('iterations', 0),
        'evaluations': result.get('evaluations', 0),
        'outputs': result['outputs'],
        'summary': result.get('summary', {}),
        'version': __version__,
    }
    result['manifest'] = save_manifest(manifest, config.output_dir)
    result['duration'] = duration

    if result['success']:
        log_success(f"{stage.name} completed successfully in {duration:.2f} seconds")
    else:
        log_error(f"{stage.name} failed after {duration:.2f} seconds: {result.get('error')}")
    return result
