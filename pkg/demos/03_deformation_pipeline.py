"""End-to-end deformation pipeline on the bundled drag system.

The pipeline checks the force-alignment condition, verifies that the slope
ratio -S(E_L)/(S(L) C(L)) depends on L alone, classifies the slope into a
closed-form family, synthesizes the deformation Phi, and verifies that
Phi(L) has vanishing Lagrange differential. Here the slope is -1/(2L), the
family is PowerShift(gamma=-1/2, a=0), and Phi is affine-equivalent to
sqrt(L): a singular (rank-1) but genuine alternative Lagrangian for a
dissipative-looking system.
"""

from lagdeform.corpus import load_corpus_problem
from lagdeform.pipeline import emit_report, run_pipeline

spec = load_corpus_problem("dissipative")
doc = run_pipeline(spec, mode="report")

print(emit_report(doc, "text").decode())

# the same document as machine-readable, byte-stable JSON:
payload = emit_report(doc, "json")
print(f"json report: {len(payload)} bytes, verdict {doc.verdict!r}")

# verdicts carry their evidence: a Deformable* verdict implies that the
# verification residual passed at the stated tolerance
print("verify residual:", doc.verify.direct.max_residual)
print("deformation:    ", doc.deformation.describe())
