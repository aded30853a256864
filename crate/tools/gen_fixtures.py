#!/usr/bin/env python3
"""Regenerate the coefficient fixtures under crates/core/fixtures.

Requires cypari2 (PARI/GP). Newform coefficients come from mfeigenbasis;
forms with coefficients in a quadratic field are embedded into C by picking
the root of the Hecke field polynomial that reproduces the listed anchor
coefficient.
"""
import json
import os
import sys

import cypari2

pari = cypari2.Pari()
pari.allocatemem(2 * 10**9)
pari.set_real_precision(60)

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "fixtures")
NMAX = int(os.environ.get("FIXTURE_NMAX", "5000"))


def trivial(modulus):
    comps = []
    for p, e in pari(f"factor({modulus})~"):
        q = int(p) ** int(e)
        gens = 2 if (int(p) == 2 and int(e) >= 3) else (0 if q in (1, 2) else 1)
        comps.append({"prime_power": q, "exponents": [[0, 1]] * gens})
    return {"modulus": modulus, "components": comps}


def embed(coefs, root):
    out = []
    for c in coefs:
        v = pari(f"subst(lift({c}), y, {root})") if "Mod" in str(c) else c
        z = complex(pari(v))
        out.append([z.real, z.imag])
    return out


def newform(level, weight, char_pari, index, anchor_n, anchor, nmax):
    mf = f"mfinit([{level},{weight}{char_pari}],0)"
    basis = pari(f"mfeigenbasis({mf})")
    form = basis[index]
    coefs = pari.mfcoefs(form, nmax)
    field = pari(f"mffields({mf})[{index + 1}]")
    if pari.poldegree(field) <= 1:
        return embed(coefs, 0), str(field)
    for root in pari.polroots(field):
        emb = embed([coefs[anchor_n]], root)[0]
        if abs(complex(*emb) - anchor) < 1e-6 * max(1.0, abs(anchor)):
            return embed(coefs, root), str(field)
    sys.exit(f"no embedding of level {level} weight {weight} matches anchor")


def write(name, level, weight, character, coeffs, field, flags, note, extra=None):
    doc = {
        "schema": "cuspidal/1",
        "weight": weight,
        "level": level,
        "character": character,
        "coefficients": coeffs[1:],
        "flags": flags,
        "source": {
            "generator": f"PARI/GP {'.'.join(map(str, pari.version()[:3]))} mfeigenbasis",
            "hecke_field": field,
            "note": note,
        },
    }
    if extra:
        doc.update(extra)
    with open(os.path.join(OUT, name), "w") as fh:
        json.dump(doc, fh, indent=None, separators=(",", ":"))
        fh.write("\n")
    print("wrote", name, len(coeffs) - 1, "coefficients")


MINIMAL = {"is_newform": True, "prime_to_n_eigenform": True, "twist_minimal": True}
S10, S129, S11 = 10**0.5, 129**0.5, 11**0.5

coeffs, field = newform(27, 4, "", 1, 2, -3.0, NMAX)
write("level27_wt4.json", 27, 4, trivial(27), coeffs, field, MINIMAL,
      "q - 3q^2 + q^4 - 15q^5 + ...")

coeffs, field = newform(25, 4, "", 2, 3, -7.0, NMAX)
write("level25_wt4.json", 25, 4, trivial(25), coeffs, field, MINIMAL,
      "q - q^2 - 7q^3 - 7q^4 + 7q^6 - 6q^7 + ...")

coeffs, field = newform(9, 8, "", 1, 2, 6 * S10, NMAX)
write("level9_wt8.json", 9, 8, trivial(9), coeffs, field, MINIMAL,
      "embedding with a_2 = +6*sqrt(10)")

coeffs, field = newform(81, 6, "", 1, 2, -(3 + S129) / 2, NMAX)
write("level81_wt6.json", 81, 6, trivial(81), coeffs, field, MINIMAL,
      "embedding with a_2 = -(3 + sqrt(129))/2")

quad5 = {"modulus": 5, "components": [{"prime_power": 5, "exponents": [[1, 2]]}]}
coeffs, field = newform(5, 6, ",[znstar(5,1),znconreychar(znstar(5,1),4)]", 0, 2,
                        -2j * S11, NMAX)
write("level5_wt6_quadratic.json", 5, 6, quad5, coeffs, field, MINIMAL,
      "even quadratic character mod 5; embedding with a_2 = -2i*sqrt(11)")
