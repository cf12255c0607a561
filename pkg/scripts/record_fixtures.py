#!/usr/bin/env python3
"""Re-record descriptor and row fixtures from live Open Data endpoints.

Needs outbound network access. Writes the same layout the importers, CLI
and mock server consume:

    fixtures/socrata/<dataset>/metadata.json   (metadata v1 API)
    fixtures/socrata/<dataset>/views.json      (views API: columns + types)
    fixtures/socrata/<dataset>/rows.json       (first --rows resource rows)
    fixtures/ckan/<resource>/resource.json     (datastore_search, limit=0)
    fixtures/ckan/<resource>/rows.json         (first --rows records)

Usage:
    python scripts/record_fixtures.py socrata analisi.transparenciacatalunya.cat uy6k-2s8r
    python scripts/record_fixtures.py ckan demo.ckan.org <resource-id> --rows 50
"""

import argparse
import json
import sys
import urllib.request
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def fetch(url: str):
    print(f"GET {url}")
    with urllib.request.urlopen(url, timeout=30) as response:
        return json.loads(response.read().decode("utf-8"))


def write(path: Path, document) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2, ensure_ascii=False) + "\n", "utf-8")
    print(f"wrote {path}")


def record_socrata(domain: str, dataset: str, rows: int) -> None:
    base = ROOT / "fixtures" / "socrata" / dataset
    write(base / "metadata.json", fetch(f"https://{domain}/api/views/metadata/v1/{dataset}.json"))
    write(base / "views.json", fetch(f"https://{domain}/api/views/{dataset}.json"))
    write(base / "rows.json", fetch(f"https://{domain}/resource/{dataset}.json?$limit={rows}"))


def record_ckan(base_url: str, resource: str, rows: int) -> None:
    base = ROOT / "fixtures" / "ckan" / resource
    action = f"https://{base_url}/api/3/action/datastore_search?resource_id={resource}"
    write(base / "resource.json", fetch(f"{action}&limit=0"))
    sample = fetch(f"{action}&limit={rows}")
    write(base / "rows.json", sample["result"]["records"])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("api", choices=["socrata", "ckan"])
    parser.add_argument("domain", help="API host")
    parser.add_argument("dataset", help="dataset id / resource id")
    parser.add_argument("--rows", type=int, default=25, help="row sample size")
    args = parser.parse_args()
    if args.api == "socrata":
        record_socrata(args.domain, args.dataset, args.rows)
    else:
        record_ckan(args.domain, args.dataset, args.rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
