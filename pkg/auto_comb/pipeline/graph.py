import os
from graphviz import Digraph

from auto_comb.assets import THEMES
from .hyperparameter import ARTIFACT_NAMES

# stage -> (consumed artifacts, produced artifacts)
STAGE_GRAPH = {
    "prep": (["ct", "organs"],
             ["intestine_mask", "intestine_volume", "removal_mask", "exclusion_mask", "analysis_mask"]),
    "wall": (["intestine_volume"], ["gmm", "bic", "threshold", "histogram", "wall_mask"]),
    "vesselness": (["ct", "removal_mask", "analysis_mask"], ["organ_removed", "vesselness"]),
    "enhance": (["vesselness", "exclusion_mask"], ["enhanced"]),
    "fuse": (["enhanced", "wall_mask", "roi"], ["proximity", "comb", "report"]),
}


def build_dot(theme="basic", vertical=True, out_dir=None):
    """
    Stage/artifact graph as a GraphViz Digraph. With out_dir, artifacts already
    present there are drawn filled.
    """
    theme = THEMES[theme] if isinstance(theme, str) else theme
    dot = Digraph()
    dot.attr("graph",
             bgcolor=theme["background_color"],
             color=theme["outline_color"],
             fontsize=theme["font_size"],
             fontcolor=theme["font_color"],
             fontname=theme["font_name"],
             margin=theme["margin"],
             rankdir="TB" if vertical else "LR",
             pad=theme["padding"])
    dot.attr("edge", style="solid",
             color=theme["outline_color"],
             fontsize=theme["font_size"],
             fontcolor=theme["font_color"],
             fontname=theme["font_name"])

    artifacts = set()
    for consumed, produced in STAGE_GRAPH.values():
        artifacts.update(consumed)
        artifacts.update(produced)
    for name in sorted(artifacts):
        present = out_dir is not None and name in ARTIFACT_NAMES \
            and os.path.exists(os.path.join(out_dir, ARTIFACT_NAMES[name]))
        dot.attr("node", shape="note" if name in ARTIFACT_NAMES else "ellipse",
                 style="filled" if present else "solid", margin="0,0",
                 fillcolor=theme["fill_color"],
                 color=theme["outline_color"],
                 fontsize=theme["font_size"],
                 fontcolor=theme["font_color"],
                 fontname=theme["font_name"])
        label = ARTIFACT_NAMES.get(name, name)
        dot.node("artifact_" + name, "<<table border='0' cellborder='0' cellpadding='0'><tr><td cellpadding='6'>{}</td></tr></table>>".format(label))

    for stage, (consumed, produced) in STAGE_GRAPH.items():
        dot.attr("node", shape="box", style="filled", margin="0,0",
                 fillcolor=theme["stage_color"],
                 color=theme["outline_color"],
                 fontsize=theme["font_size"],
                 fontcolor=theme["font_color"],
                 fontname=theme["font_name"])
        dot.node("stage_" + stage, stage)
        for name in consumed:
            dot.edge("artifact_" + name, "stage_" + stage)
        for name in produced:
            dot.edge("stage_" + stage, "artifact_" + name)
    return dot
