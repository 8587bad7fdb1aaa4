"""
Entity tracing MCP server.

Exposes the pipeline as tools: check a summary against its code, list the
code entities of a snippet, list the entities of a summary, and report
backend health. Tools delegate to plain async helpers so the same logic is
testable without a running server.
"""

import logging
import os
import sys
from contextlib import asynccontextmanager
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from fastmcp import Context, FastMCP

from .backend_manager import BackendManager
from .code_analysis import extract_code_entities as _extract_code_entities
from .config import RunConfig, load_config
from .constants import NerSource
from .matching import partition
from .models import SourceUnit, Summary
from .pipeline import EntityTracingPipeline
from .summary_ner import extract_entities, filter_fabricated

logger = logging.getLogger(__name__)

SERVICE_NAME = "Code Summary Entity Tracer"
VERSION = "1.0"

# Initialized during lifespan startup
_config: Optional[RunConfig] = None
_manager: Optional[BackendManager] = None


@asynccontextmanager
async def lifespan(app):
    """Load configuration and create the backend manager"""
    global _config, _manager

    load_dotenv()

    # ETF_CONFIG is optional; without it only heuristic NER is usable
    _config = load_config(os.getenv("ETF_CONFIG")).validate(require_backends=False)
    _manager = BackendManager(_config)
    logger.info(f"Server started: {_manager!r}")

    yield

    await _manager.aclose()


mcp = FastMCP(name=SERVICE_NAME, lifespan=lifespan)


# ============================================================================
# Tool logic
# ============================================================================

async def run_check(
    manager: BackendManager,
    config: RunConfig,
    code: str,
    summary: str,
    ner: Optional[str] = None,
    threshold: Optional[int] = None,
    count_extrinsic: Optional[bool] = None,
    direct: bool = False,
) -> Dict[str, Any]:
    """Report for one pair as a dictionary."""
    settings = config.with_overrides(threshold=threshold, count_extrinsic=count_extrinsic)
    settings = settings.validate(require_backends=False)
    extractor = manager.extractor(NerSource(ner) if ner else None)
    pipeline = EntityTracingPipeline(extractor, manager.judge(), settings.pipeline)

    unit, text = SourceUnit(text=code, id="request"), Summary(text=summary, id="request")
    report = await (pipeline.direct(unit, text) if direct else pipeline.check(unit, text))
    return report.to_dict()


def run_extract_code_entities(code: str) -> Dict[str, Any]:
    return _extract_code_entities(SourceUnit(text=code, id="request")).to_dict()


async def run_extract_summary_entities(
    manager: BackendManager,
    config: RunConfig,
    summary: str,
    code: Optional[str] = None,
    ner: Optional[str] = None,
) -> Dict[str, Any]:
    """
    Filtered summary entities, optionally partitioned against code.
    """
    text = Summary(text=summary, id="request")
    extractor = manager.extractor(NerSource(ner) if ner else None)
    candidates = await extract_entities(text, extractor, config.pipeline.max_output_attempts)
    filtration = filter_fabricated(
        candidates,
        text,
        case_insensitive=config.pipeline.lenient_case,
        polysemy_guard=config.pipeline.polysemy_guard and not extractor.trusted,
    )
    result: Dict[str, Any] = {
        "entities": [e.to_dict() for e in filtration.kept],
        "fabricated": [e.to_dict() for e in filtration.fabricated],
        "polysemous": [e.to_dict() for e in filtration.polysemous],
    }
    if code is not None:
        code_entities = _extract_code_entities(SourceUnit(text=code, id="request"))
        match = partition(filtration.kept, code_entities, config.pipeline.lenient_case)
        result["mapped"] = [
            {"entity": e.to_dict(), "code_entity": c.to_dict()} for e, c in match.mapped
        ]
        result["unmapped"] = [e.to_dict() for e in match.unmapped]
        result["natural_language"] = [e.to_dict() for e in match.nl_entities]
    return result


def health_status(manager: Optional[BackendManager]) -> Dict[str, Any]:
    if manager is None:
        return {"status": "unhealthy", "error": "server not initialized"}
    return {
        "status": "healthy",
        "service": SERVICE_NAME,
        "version": VERSION,
        "backends": manager.get_statistics(),
    }


# ============================================================================
# TOOLS
# ============================================================================

@mcp.tool()
async def check_summary(
    code: str,
    summary: str,
    ner: Optional[str] = None,
    threshold: Optional[int] = None,
    count_extrinsic: Optional[bool] = None,
    direct: bool = False,
    ctx: Context = None,
) -> Dict[str, Any]:
    """
    Check whether a summary hallucinates about its Java code.

    Args:
        code: Java source (a method, class or compilation unit)
        summary: Natural-language summary of the code
        ner: Entity source: "llm" or "heuristic". Defaults to the configured one.
        threshold: Hallucinated entities needed to flag the summary (default 1)
        count_extrinsic: Count entities absent from the code toward the threshold
        direct: Ask the judge about the whole summary instead of tracing entities

    Returns:
        Report with instance label, per-entity verdicts and flagged sentence ranges
    """
    await ctx.info("Tracing summary entities against the code...")
    report = await run_check(
        _manager, _config, code, summary, ner, threshold, count_extrinsic, direct
    )
    await ctx.info(
        f"Summary is {report['instance_label']} "
        f"({report['hallucinated_entity_count']} hallucinated entities)"
    )
    return report


@mcp.tool()
async def extract_code_entities(code: str, ctx: Context = None) -> Dict[str, Any]:
    """
    List the named program elements of a Java snippet.

    Args:
        code: Java source

    Returns:
        Entities with name, kind and location, plus the parse mode used
    """
    result = run_extract_code_entities(code)
    await ctx.info(f"Found {len(result['entities'])} code entities ({result['parse_mode']})")
    return result


@mcp.tool()
async def extract_summary_entities(
    summary: str,
    code: Optional[str] = None,
    ner: Optional[str] = None,
    ctx: Context = None,
) -> Dict[str, Any]:
    """
    Tag the code-related entities of a summary.

    Args:
        summary: Summary text
        code: Optional Java source; when given, entities are split into
            mapped, unmapped and natural-language groups
        ner: Entity source: "llm" or "heuristic"

    Returns:
        Kept, fabricated and polysemous entities (and the partition when code is given)
    """
    result = await run_extract_summary_entities(_manager, _config, summary, code, ner)
    await ctx.info(
        f"Kept {len(result['entities'])} entities, dropped {len(result['fabricated'])} fabricated"
    )
    return result


@mcp.tool()
async def health_check(ctx: Context = None) -> Dict[str, Any]:
    """
    Get server health and backend usage statistics.

    Returns:
        Dictionary with status, version and per-role backend statistics
    """
    try:
        return health_status(_manager)
    except Exception as e:
        return {"status": "unhealthy", "error": str(e)}


if __name__ == "__main__":
    transport_mode = os.getenv("MCP_TRANSPORT", "stdio").lower()

    if transport_mode == "stdio":
        print("Starting MCP server in STDIO mode", file=sys.stderr)
        mcp.run()
    else:
        port = int(os.getenv("PORT", 8000))
        print(f"Starting MCP server with HTTP streaming on port {port}", file=sys.stderr)
        mcp.run(transport="streamable-http", port=port, host="0.0.0.0")
