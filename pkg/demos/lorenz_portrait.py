"""A-portrait of the Lorenz attractor written as JSON plus two SVG views.

    python3 demos/lorenz_portrait.py [outdir]
"""
import pathlib
import sys

from aportrait import WindowPlan, build_portrait, lookup_system, render_svg

out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "lorenz_portrait")
out.mkdir(parents=True, exist_ok=True)

lorenz = lookup_system("lorenz")
doc = build_portrait(lorenz, [1.0, 1.0, 1.0], WindowPlan(0.4, 1000, 0.0, 200.0))
print(f"{len(doc.samples)} samples, scale {doc.scale:.4g}, polarity counts {doc.polarity_counts()}")

(out / "portrait.json").write_text(doc.to_json())
for view in ("xz", "iso"):
    (out / f"portrait_{view}.svg").write_text(render_svg(doc, view))
print(f"wrote {out}/")
