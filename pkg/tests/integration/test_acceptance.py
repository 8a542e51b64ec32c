import pytest

from src.models.models import CheckStatus
from src.services import verification


def test_side_wave_start_for_128_games():
    assert verification.side_wave_start(128) == 15


def test_unknown_suite():
    from src.core.exceptions import PreconditionError

    with pytest.raises(PreconditionError):
        verification.run_suite("nightly")


def test_smoke_suite(tmp_path):
    results = verification.run_suite("smoke", out_dir=str(tmp_path))
    assert [r.check_id for r in results] == verification.SUITES["smoke"]
    failed = [(r.check_id, r.detail) for r in results if r.status is not CheckStatus.PASS]
    assert not failed


@pytest.mark.slow
@pytest.mark.parametrize("check_id", [c for c in verification.SUITES["primary"] if c not in verification.SUITES["smoke"]])
def test_primary_check(check_id, tmp_path):
    result = verification.CHECKS[check_id](1e-4, tmp_path)
    assert result.status is CheckStatus.PASS, result.detail
