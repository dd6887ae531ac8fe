import logging
import os
from typing import Optional

from PIL import Image, ImageDraw, ImageFont

from lintest.schemas.report import RunReport

logger = logging.getLogger(__name__)

FONT_DIR = "/usr/share/fonts/truetype/liberation"
PASS_COLOR = (40, 140, 60)
FAIL_COLOR = (200, 40, 40)
INFO_COLOR = (0, 123, 255)


class ImageService:
    """Renders a PNG summary of a verification run"""

    def __init__(self, cache_dir: str = "cache"):
        self.cache_dir = cache_dir
        self.image_path = os.path.join(self.cache_dir, "summary.png")

    def _fonts(self):
        try:
            bold = os.path.join(FONT_DIR, "LiberationSans-Bold.ttf")
            regular = os.path.join(FONT_DIR, "LiberationSans-Regular.ttf")
            return (
                ImageFont.truetype(bold, 32),
                ImageFont.truetype(bold, 20),
                ImageFont.truetype(regular, 16),
                ImageFont.truetype(regular, 13),
            )
        except OSError:
            default = ImageFont.load_default()
            return default, default, default, default

    def generate_summary_image(self, report: RunReport, path: Optional[str] = None) -> str:
        """
        Title, one line per suite with its verdict, the first failed checks,
        and the version and seed in the footer.
        Returns: path to the written image
        """
        path = path or self.image_path
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)

        width, height = 800, 600
        text_color = (51, 51, 51)
        image = Image.new("RGB", (width, height), (255, 255, 255))
        draw = ImageDraw.Draw(image)
        title_font, header_font, text_font, small_font = self._fonts()

        title = "Long-code test verification"
        title_bbox = draw.textbbox((0, 0), title, font=title_font)
        draw.text(((width - (title_bbox[2] - title_bbox[0])) // 2, 30), title, fill=INFO_COLOR, font=title_font)

        verdict = "ALL ASSERTIONS PASSED" if report.passed else f"{len(report.failed)} SUITE(S) FAILED"
        draw.text((50, 90), verdict, fill=PASS_COLOR if report.passed else FAIL_COLOR, font=header_font)

        y = 135
        for suite in report.suites:
            if y > height - 130:
                draw.text((70, y), "...", fill=text_color, font=text_font)
                break
            if not suite.asserting:
                mark, color = "report", INFO_COLOR
            else:
                mark, color = ("pass", PASS_COLOR) if suite.passed else ("FAIL", FAIL_COLOR)
            draw.text((70, y), f"{suite.name}", fill=text_color, font=text_font)
            draw.text((330, y), mark, fill=color, font=text_font)
            y += 24

        failed_checks = [
            f"{s.name}: {c.name} (margin {c.margin:.3g})"
            for s in report.suites if s.asserting
            for c in s.checks if not c.passed
        ]
        for line in failed_checks[:3]:
            draw.text((50, y + 6), line, fill=FAIL_COLOR, font=small_font)
            y += 18

        footer = f"{report.version}  seed {report.seed}"
        if report.created_at:
            footer += f"  {report.created_at}"
        footer_bbox = draw.textbbox((0, 0), footer, font=small_font)
        draw.text(((width - (footer_bbox[2] - footer_bbox[0])) // 2, height - 30), footer, fill=text_color, font=small_font)

        image.save(path, "PNG")
        logger.info("summary image written to %s", path)
        return path

    def image_exists(self) -> bool:
        return os.path.exists(self.image_path)
