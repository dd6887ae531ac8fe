from PIL import Image

from lintest.schemas.report import InequalityEntry, RunReport, SuiteResult
from lintest.services.image_service import ImageService


def _report(passed: bool) -> RunReport:
    check = InequalityEntry.check("residual", 0.0 if passed else 1.0, "<=", 0.5)
    return RunReport(
        version="lintest-test",
        seed=9,
        config={},
        suites=[
            SuiteResult(name="fourier", passed=passed, checks=[check]),
            SuiteResult(name="corrupted_audit", passed=True, asserting=False),
        ],
    )


def test_summary_image_size(tmp_path):
    path = ImageService().generate_summary_image(_report(False), str(tmp_path / "out" / "summary.png"))
    with Image.open(path) as png:
        assert png.size == (800, 600)
        assert png.format == "PNG"


def test_default_cache_path(tmp_path):
    service = ImageService(cache_dir=str(tmp_path / "cache"))
    assert not service.image_exists()
    assert service.generate_summary_image(_report(True).stamp()) == service.image_path
    assert service.image_exists()
