"""hetsched: profile-driven scheduling of containerized jobs on
heterogeneous clusters, with TES/WES-subset APIs and RO-crate packaging."""

__version__ = "0.1.0"
