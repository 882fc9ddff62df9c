use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &std::ffi::CStr) {
    Python::initialize();
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(hkas::hkas)(py);
        let globals = PyDict::new(py);
        globals.set_item("hkas", module).unwrap();
        if let Err(e) = py.run(code, Some(&globals), None) {
            e.display(py);
            panic!("python snippet failed: {e}");
        }
    });
}

#[test]
fn graph_methods() {
    run(c"
g = hkas.AccessGraph.diamond()
assert g.classes == ['r', 'a', 'b', 'c']
assert g.edges[0] == ('r', 'a')
assert len(g) == 4
assert g.can_access('r', 'c') and not g.can_access('c', 'r')
assert (g.accessible_set('a'), g.forbidden_set('a'), g.ancestor_set('a')) == (['a', 'c'], ['b', 'c'], ['r'])
assert g.topological_sort() == ['r', 'a', 'b', 'c']
assert g.theorem_sequence('a') == ['c', 'b', 'a', 'r']
assert not g.is_well_ordered(['r', 'c'])
assert all(g.partition_check(u) for u in g.classes)
assert hkas.AccessGraph.from_json(g.to_json()).classes == g.classes
")
}

#[test]
fn schemes_and_checks() {
    run(c"
g = hkas.AccessGraph(['top', 'left', 'right'], [('top', 'left'), ('top', 'right')])
s = hkas.gen_trivial(g, 3)
assert s.support_size == 27
assert s.is_secure(exhaustive=True)
assert abs(s.entropy('H(K:left)') - 1.584962500721156) < 1e-12
bad = hkas.gen_correlated(g, 2, 'left', 'right')
r = bad.check('key-indep')
assert r['kind'] == 'key-indep' and not r['passed']
try:
    bad.check('nope')
    raise AssertionError('accepted unknown kind')
except hkas.HkasError:
    pass
rnd = hkas.gen_random_correct(g, 2, 5)
assert hkas.Scheme.from_json(rnd.to_json()).to_json() == rnd.to_json()
summary = hkas.validate(g, trials=4, seed=2)
assert summary['discrepancies'] == 0
");
}
