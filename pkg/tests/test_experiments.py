import csv
import json
import os
import shutil
import tempfile

import numpy as np
import pytest

from experiments.blockmap import block_map, grid_points, run_blockmap, sample_lemma
from experiments.checks import CheckLog
from experiments.config import ExperimentConfig
from experiments.fkt import run_fkt
from experiments.nfcheck import conjugation_defect, run_nfcheck
from experiments.scaling import SweepPoint, quasimode_checks, run_scaling, site_for
from experiments.volumes import run_volumes, slab_comparable
from geometry.volumes import BoxWindow
from normal_form.iteration import normal_form_iterate
from oracle.quasimodes import QuasimodeReport

HBAR = 2.0**-4


def read_rows(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as f:
        assert f.readline().strip() == "# schema=1"
        return list(csv.DictReader(f))


def check_names(outcome) -> set[str]:
    return {c.name for c in outcome.checks.checks}


class TestExperiments:
    """End-to-end runs on small configurations."""

    def setup_method(self):
        """Setup method to create a temporary output directory."""
        self.test_dir = tempfile.mkdtemp()

    def teardown_method(self):
        """Cleanup method to remove the output directory."""
        if os.path.exists(self.test_dir):
            shutil.rmtree(self.test_dir)

    # === volumes ===

    @pytest.mark.asyncio
    async def test_volumes_d1(self):
        """Zone fractions in d=1 shrink like hbar^(delta - gamma)."""
        config = ExperimentConfig(
            d=1,
            hbars=[2.0**-4, 2.0**-6],
            samples=20_000,
            window={"kind": "box", "half_width": 2.0},
            seed=1,
        )

        outcome = await run_volumes(config, self.test_dir, workers=1)

        assert outcome.passed, outcome.checks.failed
        assert "zone_exponent[n=1]" in check_names(outcome)
        rows = read_rows(os.path.join(self.test_dir, "volumes.csv"))
        assert [float(r["hbar"]) for r in rows] == [2.0**-6, 2.0**-4]
        assert float(rows[1]["estimate"]) == pytest.approx(0.5, abs=0.02)

    @pytest.mark.asyncio
    async def test_volumes_slab_union_d2(self):
        """The d=2 Monte Carlo estimate agrees with the exact slab union."""
        config = ExperimentConfig(
            d=2,
            hbars=[HBAR],
            samples=20_000,
            window={"kind": "box", "half_width": 2.0},
        )
        assert slab_comparable(config)

        outcome = await run_volumes(config, self.test_dir, workers=2)

        assert outcome.passed, outcome.checks.failed
        assert "slab_union[hbar=0.0625]" in check_names(outcome)
        assert outcome.summary["slab_union"]["0.0625"] == pytest.approx(0.75, abs=1e-8)

    # === blockmap ===

    def test_grid_points(self):
        """points_per_axis**d points, first axis slowest."""
        pts = grid_points(BoxWindow((0.0, 0.0), 1.0), 3)
        assert pts.shape == (9, 2)
        assert pts[1].tolist() == [-1.0, 0.0]

    def test_block_map_labels(self, H2):
        """Each point gets its lowest block."""
        points = np.array([[3.0, 3.0], [0.5, 3.0], [0.2, 0.2]])
        result = block_map(H2, points, np.zeros((0, 2)))
        assert [r["block"] for r in result.rows] == [0, 1, 2]
        assert result.uncovered == 0

    @pytest.mark.asyncio
    async def test_blockmap(self):
        """Blocks cover the grid and the lemma holds on sampled block points."""
        config = ExperimentConfig(
            d=2,
            hbars=[HBAR],
            grid_points=11,
            lemma_samples=50,
            window={"kind": "box", "half_width": 2.0},
        )

        outcome = await run_blockmap(config, self.test_dir)

        assert outcome.passed, outcome.checks.failed
        rows = read_rows(os.path.join(self.test_dir, "blockmap.csv"))
        assert len(rows) == 121
        assert list(rows[0]) == ["hbar", "xi_0", "xi_1", "block", "blocks"]
        assert sum(outcome.summary["fractions"]["0.0625"]) == pytest.approx(1.0)
        lemma = outcome.summary["lemma"]["0.0625"]
        assert lemma["requested"] == 50
        assert lemma["evaluated"] == 50
        assert lemma["draws"] >= 50

    def test_sample_lemma_draws_until_count(self, H2):
        """Points in full-dimensional blocks do not count toward the request."""
        window = BoxWindow((0.0, 0.0), 2.0)
        result = sample_lemma(block_map(H2, np.array([[3.0, 3.0]])), H2, window, np.random.default_rng(7), 30)
        assert result.lemma_points == 30
        assert result.lemma_draws > 30
        assert result.lemma_violations == 0

    def test_sample_lemma_stops_at_max_draws(self, H2):
        """A window inside the order-d zone exhausts its draws without a lemma point."""
        window = BoxWindow((0.0, 0.0), 0.5)
        result = sample_lemma(block_map(H2, np.array([[3.0, 3.0]])), H2, window, np.random.default_rng(7), 10, max_draws=25)
        assert result.lemma_draws == 25
        assert result.lemma_points == 0
        assert result.lemma_requested == 10

    @pytest.mark.asyncio
    async def test_blockmap_needs_a_box(self):
        """Annulus windows are rejected."""
        config = ExperimentConfig(d=2, hbars=[HBAR], window={"kind": "annulus"})
        with pytest.raises(ValueError, match="needs a box window"):
            await run_blockmap(config, self.test_dir)

    # === nfcheck ===

    @pytest.mark.asyncio
    async def test_nfcheck_zero_perturbation(self):
        """K0 = 0 leaves nothing to remove."""
        config = ExperimentConfig(d=1, hbars=[HBAR], perturbation=[], N=1, M=2, K_basis=8)

        outcome = await run_nfcheck(config, self.test_dir)

        assert outcome.passed, outcome.checks.failed
        assert "zero_perturbation" in check_names(outcome)
        assert os.path.exists(os.path.join(self.test_dir, "normal_form_hbar0.0625.json"))
        with open(os.path.join(self.test_dir, "normal_form_hbar0.0625.json"), encoding="utf-8") as f:
            assert "steps" not in json.load(f)
        rows = read_rows(os.path.join(self.test_dir, "conjugation.csv"))
        assert float(rows[0]["telescoping_norm"]) == 0.0

    @pytest.mark.asyncio
    async def test_nfcheck_cosine(self):
        """Remainder rows are written per step and P, A, K stay self-adjoint."""
        config = ExperimentConfig(d=1, hbars=[HBAR], N=2, M=3, K_basis=12, band_limit=4)

        outcome = await run_nfcheck(config, self.test_dir)

        assert outcome.passed, outcome.checks.failed
        rows = read_rows(os.path.join(self.test_dir, "remainders.csv"))
        assert [int(r["step"]) for r in rows] == [0, 1]

    def test_conjugation_defect(self, H1, cos_perturbation):
        """Without generators U is the identity; one step moves it away."""
        bare = normal_form_iterate(H1, cos_perturbation, N=0, M=2)
        one = normal_form_iterate(H1, cos_perturbation, N=1, M=3)
        assert conjugation_defect(bare, 12).unitary_deviation == 0.0
        assert conjugation_defect(one, 12).unitary_deviation > 0.0

    # === scaling ===

    def test_site_for(self):
        """Nearest lattice site to a momentum."""
        assert site_for([1.5], HBAR) == (24,)
        assert site_for([1.5, -0.5], 2.0**-5) == (48, -16)

    @pytest.mark.asyncio
    async def test_scaling_single_hbar(self):
        """One row per site; matrices are dumped on request."""
        config = ExperimentConfig(d=1, hbars=[HBAR], N=1, M=2, K_basis=8, momenta=[[1.5], [0.25]])

        outcome = await run_scaling(config, self.test_dir, dump_matrices=True)

        assert outcome.passed, outcome.checks.failed
        rows = read_rows(os.path.join(self.test_dir, "quasimodes.csv"))
        assert [r["k"] for r in rows] == ["24"]
        assert len(outcome.summary["skipped"]) == 1
        assert os.path.exists(os.path.join(self.test_dir, "matrices", "total_hbar0.0625_k24.bin"))

    @pytest.mark.asyncio
    async def test_scaling_default_config(self):
        """The default N, M and basis size build a quasimode without widening the window."""
        outcome = await run_scaling(ExperimentConfig(d=1, hbars=[HBAR]), self.test_dir)

        assert outcome.passed, outcome.checks.failed
        assert outcome.summary["reports"] == 1
        rows = read_rows(os.path.join(self.test_dir, "quasimodes.csv"))
        assert [r["nf_order"] for r in rows] == ["3"]

    def test_weyl_violation_fails_its_check(self):
        """A recorded gap above the residual shows up as a failed check."""
        report = QuasimodeReport(HBAR, (24,), 1.125, 1e-6, 1e-3, 0.99, 1)
        checks = CheckLog()

        quasimode_checks(ExperimentConfig(d=1, hbars=[HBAR]), [SweepPoint(HBAR, None, None, None, reports={0: report})], checks)

        assert checks.failed == ["weyl_bound[hbar=0.0625,k=[24]]"]

    # === fkt ===

    @pytest.mark.asyncio
    async def test_fkt_single_hbar(self):
        """The first correction is the torus average of K0, here zero."""
        config = ExperimentConfig(d=1, hbars=[HBAR], N=1, M=2, K_basis=8)

        outcome = await run_fkt(config, self.test_dir)

        assert outcome.passed, outcome.checks.failed
        assert "first_correction[hbar=0.0625]" in check_names(outcome)
        rows = read_rows(os.path.join(self.test_dir, "fkt.csv"))
        assert float(rows[0]["first_correction"]) == 0.0
        assert float(rows[0]["E"]) == pytest.approx(2.25)

    @pytest.mark.asyncio
    async def test_fkt_default_config(self):
        """fkt runs on the default N, M and basis size."""
        outcome = await run_fkt(ExperimentConfig(d=1, hbars=[HBAR]), self.test_dir)

        assert outcome.passed, outcome.checks.failed
        assert os.path.exists(os.path.join(self.test_dir, "fkt.csv"))

    @pytest.mark.asyncio
    async def test_fkt_with_mean(self):
        """A constant mode shifts the first correction by hbar^2 times its value."""
        config = ExperimentConfig(
            d=1,
            hbars=[HBAR],
            N=1,
            M=2,
            K_basis=8,
            perturbation=[{"k": [0], "value": 0.5}, {"k": [1], "value": 1.0}, {"k": [-1], "value": 1.0}],
        )

        outcome = await run_fkt(config, self.test_dir)

        assert outcome.passed, outcome.checks.failed
        rows = read_rows(os.path.join(self.test_dir, "fkt.csv"))
        assert float(rows[0]["first_correction"]) == pytest.approx(0.5 * HBAR**2)

    @pytest.mark.asyncio
    async def test_fkt_preconditions(self):
        """kappa must be 2 and at least one step is needed."""
        with pytest.raises(ValueError, match="kappa = 2"):
            await run_fkt(ExperimentConfig(kappa=1.5, hbars=[HBAR]), self.test_dir)
        with pytest.raises(ValueError, match="N >= 1"):
            await run_fkt(ExperimentConfig(N=0, hbars=[HBAR]), self.test_dir)
