"""
Prompt templates for the four model roles.

Template text is frozen: request fingerprints hash the rendered prompt, so any
edit here invalidates every recorded fixture. Placeholders are substituted in
a single pass that only recognises the known names, because Java code and the
direct-evaluation format both contain literal braces.
"""

import re
from typing import Dict, Sequence

SUMMARY_GENERATION_TEMPLATE = (
    "Assume you are an expert in understanding JAVA code.\n"
    "Question: As a Java Expert, please provide a detailed summary of the following "
    "Java code with the following sections:\n"
    "1. Inputs and outputs of the method\n"
    "2. Business purpose\n"
    "3. Detailed functional summary of the method.\n"
    "```\n"
    " {CODE}\n"
    "```"
)

INTENT_VERIFICATION_TEMPLATE = (
    "Assume you are an expert in understanding JAVA code. Your task is to verify "
    "whether the description of '{mapped_entity}' in the given text is correct, "
    "incorrect, or irrelevant with respect to the code.\n"
    'Only output one of the following labels: ["CORRECT", "INCORRECT", "IRRELEVANT"].\n'
    "Description:\n"
    "{relevant_sent}\n"
    "[CODE]\n"
    "{CODE}\n"
    "[/CODE]"
)

NER_TEMPLATE = (
    "Assume you are an expert in understanding Java and performing named entity "
    "recognition related to Java code. You have to label the entities by "
    "considering the following labels:\n"
    "\n"
    "Code Entities: CLASS, VARIABLE, FUNCTION, LIBRARY, VALUE, DATA TYPE, and HTML "
    "or XML TAG\n"
    "Natural Language Entities: APPLICATION, UI ELEMENT, LANGUAGE, DATA STRUCTURE, "
    "ALGORITHM, FILE TYPE, FILE NAME, VERSION, DEVICE, OS, WEBSITE, and USER NAME.\n"
    "\n"
    "For every entity in the input, mention the entity_type in the given format "
    "only. Strictly follow this template and only print the output without any "
    "other words. You can follow the example below:\n"
    "```\n"
    " {Incontext Example}\n"
    "```\n"
    "\n"
    "Now consider the summary describing the code below:\n"
    " {generated_summary}"
)

DIRECT_EVALUATION_TEMPLATE = (
    "Assume you are an expert in understanding JAVA code. Your task is to verify "
    "if the description of the code entities present in the given summary is "
    "correctly described or NOT as per the code logic.\n"
    "Output all the 'entity_name' and a relevant_sentence' corresponding to the "
    "'entity_name', which are incorrectly described. Do not provide any other "
    "details.\n"
    'Strictly follow this format: [{entity_name:"", relevant_sentence:""}]\n'
    "\n"
    "Summary:\n"
    " {SUMMARY}\n"
    "\n"
    "Code:\n"
    " {CODE}"
)

# In-context example shown to the NER model. Changing it changes live NER
# output and invalidates recorded NER fixtures.
NER_IN_CONTEXT_EXAMPLE = (
    "Summary: The loadUsers() method reads the users.csv file with a "
    "BufferedReader and stores each row in the userList ArrayList. It returns "
    "null when the path is empty. The code is written in Java.\n"
    "Output:\n"
    "loadUsers() ||| FUNCTION\n"
    "users.csv ||| FILE NAME\n"
    "BufferedReader ||| CLASS\n"
    "userList ||| VARIABLE\n"
    "ArrayList ||| DATA STRUCTURE\n"
    "null ||| VALUE\n"
    "path ||| VARIABLE\n"
    "Java ||| LANGUAGE"
)

_PLACEHOLDER = re.compile(
    r"\{(CODE|SUMMARY|mapped_entity|relevant_sent|Incontext Example|generated_summary)\}"
)


def _fill(template: str, values: Dict[str, str]) -> str:
    return _PLACEHOLDER.sub(lambda m: values[m.group(1)], template)


def render_summary_prompt(code: str) -> str:
    return _fill(SUMMARY_GENERATION_TEMPLATE, {"CODE": code})


def render_intent_prompt(entity_name: str, sentences: Sequence[str], code: str) -> str:
    """Relevant sentences are joined one per line."""
    return _fill(
        INTENT_VERIFICATION_TEMPLATE,
        {
            "mapped_entity": entity_name,
            "relevant_sent": "\n".join(sentences),
            "CODE": code,
        },
    )


def render_ner_prompt(summary: str, example: str = NER_IN_CONTEXT_EXAMPLE) -> str:
    return _fill(
        NER_TEMPLATE, {"Incontext Example": example, "generated_summary": summary}
    )


def render_direct_prompt(code: str, summary: str) -> str:
    return _fill(DIRECT_EVALUATION_TEMPLATE, {"SUMMARY": summary, "CODE": code})
