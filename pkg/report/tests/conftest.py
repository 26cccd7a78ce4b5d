import pytest

HEADER = "experiment,dataset,algorithm,update_step,avg_latency_ms,seed"


@pytest.fixture
def fixture_csv(tmp_path):
    """Tiny result file: 2 learned algorithms over steps 0..20 plus two
    step-constant heuristics, on two datasets; optimal missing on set_b
    (capped)."""
    lines = [HEADER]
    for ds in ("set_a", "set_b"):
        for step in range(0, 21):
            lines.append(f"exp,{ds},mrlco,{step},{200.0 - 2 * step:.9f},0")
            lines.append(f"exp,{ds},finetune,{step},{205.0 - 1.5 * step:.9f},0")
            lines.append(f"exp,{ds},heft,{step},180.000000000,0")
            if ds == "set_a":
                lines.append(f"exp,{ds},optimal,{step},170.000000000,0")
    path = tmp_path / "results.csv"
    path.write_text("\n".join(lines) + "\n")
    return path
