# src/tools/config_reader.py
import json
import os

from langfuse import observe
from pydantic import ValidationError

from experiments.config import ExperimentConfig


@observe
def read_config_file(file_path: str) -> dict:
    """
    Read a JSON experiment configuration from disk.

    Returns a dict with "success", the parsed "config" mapping (empty on
    failure) and an "error" message when reading or parsing failed.
    """
    def failure(message: str) -> dict:
        return {"success": False, "error": message, "config": {}, "file_path": file_path}

    if not os.path.exists(file_path):
        return failure(f"File not found: {file_path}")
    if not os.path.isfile(file_path):
        return failure(f"Path is not a file: {file_path}")
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            document = json.load(f)
    except UnicodeDecodeError:
        return failure(f"Unable to read file as UTF-8: {file_path}")
    except PermissionError:
        return failure(f"Permission denied reading file: {file_path}")
    except json.JSONDecodeError as e:
        return failure(f"Invalid JSON in {file_path}: {e}")
    if not isinstance(document, dict):
        return failure(f"Configuration must be a JSON object, got {type(document).__name__}")
    return {"success": True, "config": document, "file_path": file_path, "error": ""}


def load_config(file_path: str | None, **overrides) -> ExperimentConfig:
    """
    Validated ExperimentConfig from a file (or defaults when no file is given),
    with non-None overrides applied on top.
    """
    document: dict = {}
    if file_path is not None:
        result = read_config_file(file_path)
        if not result["success"]:
            raise RuntimeError(result["error"])
        document = result["config"]
    document.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as e:
        raise RuntimeError(f"Invalid configuration: {e}") from e
