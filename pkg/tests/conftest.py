from fractions import Fraction

from hypothesis import HealthCheck, settings, strategies as st

from pervglue.linalg import Matrix

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

small_rationals = st.builds(Fraction, st.integers(-4, 4), st.integers(1, 3))


@st.composite
def matrices(draw, max_rows=8, max_cols=8, min_rows=0, min_cols=0, square=False):
    r = draw(st.integers(min_rows, max_rows))
    c = r if square else draw(st.integers(min_cols, max_cols))
    # sparse-ish entries so that rank deficiency actually happens
    entry = st.one_of(st.just(Fraction(0)), st.just(Fraction(0)), small_rationals)
    return Matrix(r, c, [[draw(entry) for _ in range(c)] for _ in range(r)])


@st.composite
def posets(draw, max_size=6):
    from pervglue.poset import Poset
    n = draw(st.integers(1, max_size))
    names = [f"p{i}" for i in range(n)]
    pairs = [(names[i], names[j]) for i in range(n) for j in range(i + 1, n)]
    rel = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Poset(names, rel)


def indicator(P, members):
    """k on ``members`` (an up-set or down-set), identities inside, zero elsewhere."""
    from pervglue.sheaf import Sheaf
    members = set(members)
    dims = {x: int(x in members) for x in P.elements}
    rest = {(x, y): Matrix.identity(1) for x, y in P.covers if x in members and y in members}
    return Sheaf(P, dims, rest)


def random_sheaf(P, rng, parts=3):
    """Cokernel of a random map between sums of indicator sheaves."""
    from pervglue.sheaf import cokernel, direct_sum, hom_basis, zero_morphism

    def piece():
        x = rng.choice(P.elements)
        if rng.random() < 0.5:
            return indicator(P, P.up(x))
        return indicator(P, set(P.down(x)) | {x})

    from pervglue.sheaf import zero_sheaf
    A = direct_sum(zero_sheaf(P), *[piece() for _ in range(rng.randint(0, parts))])
    B = direct_sum(*[piece() for _ in range(rng.randint(1, parts))])
    f = zero_morphism(A, B)
    for m in hom_basis(A, B):
        c = rng.randint(-1, 2)
        if c:
            f = f + m.scale(c)
    return cokernel(f)[0]


def random_sheaf_map(F, G, rng):
    from pervglue.sheaf import hom_basis, zero_morphism
    f = zero_morphism(F, G)
    for m in hom_basis(F, G):
        c = rng.randint(-2, 2)
        if c:
            f = f + m.scale(c)
    return f


seeds = st.integers(0, 2**32 - 1)


def random_complex(P, rng, low=0):
    """A -> B -> coker in degrees low, low+1, low+2."""
    from pervglue.complex import SheafComplex
    from pervglue.sheaf import cokernel
    A, B = random_sheaf(P, rng), random_sheaf(P, rng)
    f = random_sheaf_map(A, B, rng)
    C, c = cokernel(f)
    if rng.random() < 0.5:
        # keep some cohomology in the middle by sometimes dropping the cokernel
        return SheafComplex(P, {low: A, low + 1: B}, {low: dict(f.comp)})
    return SheafComplex(P, {low: A, low + 1: B, low + 2: C}, {low: dict(f.comp), low + 1: dict(c.comp)})


def random_chain_map(C, D, rng):
    from pervglue.complex import chain_maps_basis, zero_map
    f = zero_map(C, D)
    for m in chain_maps_basis(C, D):
        k = rng.randint(-2, 2)
        if k:
            f = f + m.scale(k)
    return f
