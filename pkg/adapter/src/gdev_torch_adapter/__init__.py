"""ResNet inference worker for the gdev harness's stdio JSON protocol."""

__version__ = "0.1.0"
