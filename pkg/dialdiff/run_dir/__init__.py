from dialdiff.run_dir.run_directory import RunDirectory, RunManifest

__all__ = ["RunDirectory", "RunManifest"]
