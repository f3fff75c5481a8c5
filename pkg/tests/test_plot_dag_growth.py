import pytest

matplotlib = pytest.importorskip("matplotlib")
pytest.importorskip("seaborn")
matplotlib.use("Agg")

from formula_families import dag_growth_table  # noqa: E402
from plot_dag_growth import plot_growth  # noqa: E402


def test_plot_growth_writes_figure(tmp_path, capsys):
    out = tmp_path / "growth.png"
    plot_growth(dag_growth_table("phi_n", [2, 3, 4]), str(out))
    assert out.stat().st_size > 0
    assert "Generated" in capsys.readouterr().out
