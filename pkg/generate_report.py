"""
generate_report.py

Run report generator: reads a finished run directory (manifest, tables, text reports)
and renders an HTML summary together with the discrepancy ledger.
"""

import argparse
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd
from jinja2 import Environment, FileSystemLoader, select_autoescape

from api.manifest import RunManifest, read_manifest
from evaluator import DiscrepancyLedger

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

TEMPLATE_DIR = Path(__file__).resolve().parent / "templates"

# Tables a run may emit, in the order the report shows them
REPORT_TABLES = {
    "peaks": "Detected peaks",
    "data_reduction": "Sampling-rate reduction",
    "sideband_table": "Sideband table against FFT band powers",
    "chirp_linearity": "Chirp linearity of the selected order",
    "filter_feasibility": "Optical filter feasibility",
}


class RunReportGenerator:
    """
    Builds an HTML report for one run directory.

    Attributes:
        run_dir (Path): Published run directory
        manifest (Optional[RunManifest]): The run's manifest, None when it cannot be read
        tables (Dict[str, pd.DataFrame]): CSV tables found in the run directory
    """

    def __init__(self, run_dir: str):
        """
        Initialize the report generator.

        Args:
            run_dir: Directory written by `main.py simulate`
        """
        self.run_dir = Path(run_dir)
        self.manifest = self._load_manifest()
        self.tables = self._load_tables()

    def _load_manifest(self) -> Optional[RunManifest]:
        try:
            return read_manifest(self.run_dir)
        except Exception as e:
            logger.error(f"Error loading manifest: {str(e)}")
            return None

    def _load_tables(self) -> Dict[str, pd.DataFrame]:
        tables = {}
        for name in REPORT_TABLES:
            path = self.run_dir / f"{name}.csv"
            if path.is_file():
                tables[name] = pd.read_csv(path)
        return tables

    def generate_summary_table(self) -> pd.DataFrame:
        """
        Flatten the manifest summary into (quantity, value) rows.

        Returns:
            DataFrame with one row per headline number; empty without a manifest
        """
        if self.manifest is None or not self.manifest.summary:
            return pd.DataFrame(columns=["quantity", "value"])
        flat = pd.json_normalize(self.manifest.summary, sep=".").iloc[0]
        return pd.DataFrame({"quantity": flat.index, "value": flat.values})

    def _context(self) -> Dict[str, Any]:
        ledger = DiscrepancyLedger()
        return {
            "manifest": self.manifest,
            "run_dir": str(self.run_dir),
            "summary": self.generate_summary_table().to_html(index=False, float_format="%.6g"),
            "tables": [
                (title, self.tables[name].to_html(index=False, float_format="%.6g"))
                for name, title in REPORT_TABLES.items() if name in self.tables
            ],
            "ledger": ledger.evaluate(),
        }

    def generate_html_report(self, output_file: str) -> None:
        """
        Render the HTML report.

        Args:
            output_file: Path where the HTML report will be saved
        """
        env = Environment(loader=FileSystemLoader(TEMPLATE_DIR), autoescape=select_autoescape(["html"]))
        html = env.get_template("report.html.j2").render(**self._context())
        Path(output_file).write_text(html)
        logger.info(f"Saved HTML report to {output_file}")

    def generate_full_report(self, output_dir: Optional[str] = None) -> Path:
        """
        Write index.html and summary.csv.

        Args:
            output_dir: Target directory; defaults to <run_dir>/report

        Returns:
            Path of the report directory
        """
        out = Path(output_dir) if output_dir else self.run_dir / "report"
        out.mkdir(parents=True, exist_ok=True)
        self.generate_summary_table().to_csv(out / "summary.csv", index=False)
        self.generate_html_report(str(out / "index.html"))
        logger.info(f"Generated run report in {out}")
        return out


def main():
    """
    Main entry point for the report generator.

    Parses command line arguments and writes the report of one run directory.
    """
    parser = argparse.ArgumentParser(description='Simulator run report generator')
    parser.add_argument('--run-dir', type=str, required=True, help='Run directory written by main.py simulate')
    parser.add_argument('--output-dir', type=str, help='Directory to save the report (default: <run-dir>/report)')
    args = parser.parse_args()

    report_generator = RunReportGenerator(args.run_dir)
    report_generator.generate_full_report(args.output_dir)


if __name__ == "__main__":
    main()
