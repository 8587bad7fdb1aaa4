#!/usr/bin/env python3
"""
Run the entity tracer MCP server over STDIO for desktop MCP clients.

Set ETF_CONFIG to a YAML config to enable LLM backends.
"""
import os
import sys

# The repository root holds the src package
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.server import mcp

if __name__ == "__main__":
    mcp.run()
