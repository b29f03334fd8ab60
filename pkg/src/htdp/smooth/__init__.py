from htdp.smooth.contraction import (
    CounterexampleWitness,
    SweepResult,
    check_smooth_contraction,
    clip_coefficient,
    counterexample_noncontraction,
    drift_sequence_fuzz,
    glm_clipped_step,
    glm_contraction_sweep,
    quadratic_gradient,
    random_psd,
    simulate_drift_sequence,
)
from htdp.smooth.glm import (
    GlmPhaseSchedule,
    glm_beta_limit,
    glm_schedule,
    glm_sensitivity_audit,
    opcdpsgd_glm,
)
from htdp.smooth.phased import (
    SmoothConfig,
    alg_smooth,
    audit_drift,
    custom_config,
    draw_phase_noise,
    smooth_params,
    write_audit_csv,
)

__all__ = [
    "CounterexampleWitness", "SweepResult", "check_smooth_contraction", "clip_coefficient",
    "counterexample_noncontraction", "drift_sequence_fuzz", "glm_clipped_step",
    "glm_contraction_sweep", "quadratic_gradient", "random_psd", "simulate_drift_sequence",
    "GlmPhaseSchedule", "glm_beta_limit", "glm_schedule", "glm_sensitivity_audit",
    "opcdpsgd_glm", "SmoothConfig", "alg_smooth", "audit_drift", "custom_config",
    "draw_phase_noise", "smooth_params", "write_audit_csv",
]
