"""
Loaders for the documents under `lib/fixtures/`, shared by the test modules.
"""

from prob_tree_app.lib.kb_documents import KbDocument, fixture_path, load_document, parse_kb
from prob_tree_app.lib.tree_analysis import ConstraintTree


def fixture_document(name: str) -> KbDocument:
    return parse_kb(load_document(fixture_path(name)))


def fixture_tree(name: str) -> ConstraintTree:
    return fixture_document(name).tree()


def kb_l() -> ConstraintTree:
    """
    The nine-node exact tree over M N O P Q R S T U.
    """
    return fixture_tree('kb_l.cct')


def star() -> ConstraintTree:
    return fixture_tree('star.cct')
