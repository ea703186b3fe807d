# -*- coding: utf-8 -*-
"""
Shared fixtures: a project store in a temporary directory, sandbox settings,
the pipeline, a Flask test client and the E3/E8 environment requests.
"""

import pytest

from app import create_app
from app.config import load_settings
from app.pipeline import Pipeline
from app.projects.store import ProjectStore

JSON_HEADERS = {"Accept": "application/json"}

E3_REQUEST = {
    "languages": ["C++"],
    "languagesVersion": {"C++": "gcc:8"},
    "commandsToAdd": [
        "g++ -O3 ./src/bbfs_node.cpp -o out",
        "g++ -O3 ./src/bbfs_edge.cpp -o out",
    ],
}

E3_DOCKERFILE = (
    "FROM ubuntu:20.04\n"
    "RUN  apt update &&  apt upgrade -y\n"
    "RUN apt install -y gcc-8 make g++\n"
    "RUN update-alternatives --install /usr/bin/gcc gcc /usr/bin/gcc-8 2000\n"
    "WORKDIR /files\n"
    "COPY ./files .\n"
    "RUN g++ -O3 ./src/bbfs_node.cpp -o out\n"
    "RUN g++ -O3 ./src/bbfs_edge.cpp -o out\n"
)

E8_REQUEST = {
    "languages": ["python", "shell", "java"],
    "languagesVersion": {"java": "openjdk-11", "python": "python:3.8"},
    "commandsToAdd": ["cd RLCheck/jqf/", "mvn package", "cd ../.."],
    "hasRequirementsFile": "true",
}

E8_DOCKERFILE = (
    "FROM ubuntu:20.04\n"
    "RUN  apt update &&  apt upgrade -y\n"
    "RUN apt install -y python3.8 python3-pip\n"
    "RUN update-alternatives --install /usr/local/bin/python python /usr/bin/python3.8 2000\n"
    "RUN update-alternatives --install /usr/bin/pip pip /usr/bin/pip3 2000\n"
    "RUN apt install -y openjdk-11-jdk openjdk-11-jre maven\n"
    "WORKDIR /files\n"
    "COPY ./files .\n"
    "RUN mvn package\n"
    "WORKDIR RLCheck/jqf/\n"
    "RUN mvn package\n"
    "WORKDIR ../..\n"
    "RUN pip install -r requirements.txt\n"
)


@pytest.fixture
def e3_request():
    return dict(E3_REQUEST)


@pytest.fixture
def e8_request():
    return dict(E8_REQUEST)


@pytest.fixture(autouse=True)
def log_folder(tmp_path, monkeypatch):
    """Keep log files out of the working tree."""
    folder = tmp_path / "logs"
    monkeypatch.setenv("LOG_FOLDER", str(folder))
    return folder


@pytest.fixture
def store_path(tmp_path):
    return tmp_path / "store"


@pytest.fixture
def store(store_path):
    return ProjectStore(store_path)


@pytest.fixture
def settings(store_path):
    """Sandbox settings over a temporary store."""
    return load_settings(store_path=store_path, driver="sandbox", run_timeout=60)


@pytest.fixture
def pipeline(settings):
    return Pipeline(settings)


@pytest.fixture
def flask_app(settings, pipeline):
    app = create_app(settings, pipeline)
    app.config["TESTING"] = True
    return app


@pytest.fixture
def client(flask_app):
    with flask_app.test_client() as test_client:
        yield test_client
