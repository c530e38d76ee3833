import csv
import hashlib
import json
import os
import subprocess
import sys
from importlib import metadata

# Distributions whose versions go into every manifest
TRACKED_PACKAGES = ["numpy", "scipy", "polars", "prefect", "hydra-core", "omegaconf", "wandb"]

RUN_TRACKING_COLUMNS = [
    "command",
    "out_dir",
    "config_hash",
    "seed",
    "wall_time_seconds",
    "exit_code",
    "commit",
    "commit_branch",
]


def get_git_info():
    try:
        commit = (
            subprocess.check_output(["git", "rev-parse", "HEAD"], stderr=subprocess.DEVNULL)
            .strip()
            .decode("utf-8")
        )
        branch = (
            subprocess.check_output(
                ["git", "rev-parse", "--abbrev-ref", "HEAD"], stderr=subprocess.DEVNULL
            )
            .strip()
            .decode("utf-8")
        )
        return {"git_commit": commit, "git_branch": branch}
    except (subprocess.CalledProcessError, FileNotFoundError):
        return None


def package_versions(packages=None) -> dict:
    versions = {"python": sys.version.split()[0]}
    for name in packages or TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions


def canonical_hash(payload) -> str:
    """SHA-256 of the JSON form with sorted keys."""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def ensure_directory_exists(path):
    """Create `path` if needed; raise OSError when it cannot be created or written."""
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory is not writable: {path}")
    return path


def dict_to_csv(data_dict, csv_file_path):
    """Append one row, writing the header when the file is new."""
    file_exists = os.path.isfile(csv_file_path)
    with open(csv_file_path, "a", newline="") as csv_file:
        writer = csv.DictWriter(csv_file, fieldnames=list(data_dict.keys()))
        if not file_exists:
            writer.writeheader()
        writer.writerow(data_dict)
