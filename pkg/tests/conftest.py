"""Shared pytest config: a terminal summary for the acceptance criteria."""

CRITERIA = {
    "test_length_invariant_and_reconstruction": "output length = t_max, chunk recovered bit-exactly (1e4 pairs, <30s)",
    "test_snr_calibration": "measured padding SNR within +/-0.5 dB of sampled (1000 trials)",
    "test_ht_hmt_structure": "HT speech contiguous, HMT speech in at most two runs",
    "test_metric_oracle_equivalence": "EER/minDCF match brute-force sweeps (1000 sets) and worked examples",
    "test_feature_contracts": "3s -> 298 frames, CMN means < 1e-6, no NaN on zeros",
    "test_gradient_check": "analytic vs central-difference gradients, rel err < 1e-4 (<10s)",
    "test_directional_padding_robustness": "baseline degrades on padded sets; padded-trained model does not lose to it (<5min)",
    "test_ratio_sweep_stability": "baseline EER grows k=0->8; padded-trained model's growth is smaller",
    "test_vad_retention": ">=95% speech kept, >=80% interior silence dropped",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            if name in CRITERIA and results.get(name, "passed") == "passed":
                results[name] = outcome
    if not results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, text in CRITERIA.items():
        if name in results:
            status = "PASS" if results[name] == "passed" else "FAIL"
            terminalreporter.write_line(f"[{status}] {name}: {text}")
