# -*- coding: utf-8 -*-
"""
Module: suggest.py

Draft an environment request from what can be inferred about a project. The
draft is a starting point for the researcher, who validates and edits it before
the environment is built.
"""

import logging
import shlex

from app.environment.dependencies import (
    REQUIREMENTS_FILE,
    build_graph,
    detect_requirements_file,
    emit_requirements,
)
from app.environment.languages import Language, infer_languages, load_language_table
from app.exceptions import NotSupportedError, ValidationError
from app.projects.models import EntryAction

logger = logging.getLogger(__name__)


def _r_install_command(externals):
    names = ", ".join(f"'{req.name}'" for req in sorted(externals))
    return "Rscript -e " + shlex.quote(f"install.packages(c({names}))")


def suggest_request(store, project_id, table=None, aliases=None):
    """
    Infer languages, requirements file and dependencies and combine them
    into a draft request with default toolchain versions.
    """
    table = table or load_language_table()
    project = store.get_project(project_id)
    files_root = store.files_root(project_id)
    profile = infer_languages(project.tree, table)
    languages = sorted(profile.languages, key=lambda language: language.value)
    if Language.JUPYTER_NOTEBOOK in profile.languages and Language.PYTHON not in profile.languages:
        languages.append(Language.PYTHON)

    requirements_file = detect_requirements_file(project.tree)
    commands = []
    dependencies = {}
    inferred_requirements = None
    for language in (Language.PYTHON, Language.R):
        if language not in languages:
            continue
        try:
            graph = build_graph(project.tree, language, files_root, aliases)
        except NotSupportedError:
            continue
        dependencies[table.display(language)] = graph.to_dict()
        if language is Language.PYTHON and requirements_file is None and graph.externals:
            inferred_requirements = emit_requirements(graph.externals)
        if language is Language.R and graph.externals:
            commands.append(_r_install_command(graph.externals))

    request = {
        "languages": [table.display(language) for language in languages],
        "languagesVersion": {
            table.display(language): table.languages[language]["default"]
            for language in languages
            if not table.languages[language].get("versionless")
        },
        "commandsToAdd": commands,
        "hasRequirementsFile": requirements_file is not None,
    }
    if project.seeds:
        request["seeds"] = [seed.to_dict() for seed in project.seeds]
    logger.info("Suggested %s for project %s", request["languages"], project_id)
    return {
        "request": request,
        "profile": profile.to_dict(table),
        "dependencies": dependencies,
        "requirementsFile": requirements_file,
        "inferredRequirements": inferred_requirements,
    }


def write_inferred_requirements(store, project_id, aliases=None):
    """
    Create a root `requirements.txt` from the inferred Python dependencies.
    """
    project = store.get_project(project_id)
    if detect_requirements_file(project.tree) is not None:
        raise ValidationError(f"{REQUIREMENTS_FILE} already exists")
    graph = build_graph(project.tree, Language.PYTHON, store.files_root(project_id), aliases)
    text = emit_requirements(graph.externals)
    node = store.modify_entry(project_id, EntryAction.CREATE_FILE, REQUIREMENTS_FILE, text)
    logger.info("Wrote %d inferred requirements for project %s", len(graph.externals), project_id)
    return node, text
