import os
import sys

import pytest
import yaml

sys.path.insert(0, os.path.dirname(__file__))

from hetsched import cluster as cl
from hetsched import executor as ex
from hetsched.catalog import parse_tool

TWO_CLASS_CLUSTER = {
    "classes": [
        {
            "name": "regular-memory",
            "cost_rank": 1,
            "capacity": {"cpu_cores": 8, "memory_mb": 4096, "disk_mb": 100000},
        },
        {
            "name": "large-memory",
            "cost_rank": 2,
            "capacity": {"cpu_cores": 16, "memory_mb": 32768, "disk_mb": 100000},
        },
    ],
    "nodes": [
        {"id": "n1", "class": "regular-memory"},
        {"id": "n2", "class": "regular-memory"},
        {"id": "n3", "class": "large-memory"},
    ],
}

MEMTOOL_CWL = """
cwlVersion: v1.0
class: CommandLineTool
id: memtool
version: "1.0"
baseCommand: [simulate-memtool]
image: registry.example/memtool:1.0
inputs:
  file_mb:
    type: int
    inputBinding: {position: 1, prefix: --size}
outputs:
  result:
    outputBinding: {glob: "*.out"}
"""

# peak_mem = 100 + 1.5*file_mb, cpu = 50 + 0.1*file_mb
MEMTOOL_COST = {
    "memtool": {
        "peak_mem_mb": {"intercept": 100.0, "coeffs": {"file_mb": 1.5}},
        "cpu_seconds": {"intercept": 50.0, "coeffs": {"file_mb": 0.1}},
        "noise_sigma": 0.0,
        "failure_rate": 0.0,
    }
}


@pytest.fixture
def two_class_cluster():
    return cl.load_cluster_spec(yaml.safe_dump(TWO_CLASS_CLUSTER))


@pytest.fixture
def memtool():
    return parse_tool(MEMTOOL_CWL)


@pytest.fixture
def memtool_cost():
    return ex.cost_model_from_dict(MEMTOOL_COST)
