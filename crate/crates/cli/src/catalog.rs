//! What `hitlab catalog` lists.

use hitlab::SystemSpec;
use serde_json::{json, Value};

const SYSTEMS: &[(&str, &str)] = &[
    ("doubling", "x -> 2x mod 1, exact through a seeded bit reservoir"),
    ("cat", "toral automorphism [[2,1],[1,1]] on T^2"),
    ("toral:[[a,b],[c,d]]", "integer matrix with determinant +-1, any size up to 4"),
    ("rotation:golden", "x -> x + (sqrt 5 - 1)/2 mod 1"),
    ("rotation:liouville", "rotation by a Liouville-type number"),
    ("rotation:<decimal>", "rotation by the given decimal"),
    ("mp:<s>", "x -> x + x^(1+s) mod 1 for 0 < s < 1"),
];

const OBSERVABLES: &[(&str, &str)] = &[
    ("dist:<x1,...>", "torus distance to a point"),
    ("projdist:<coords>:<target>", "distance of 1-based coordinates to a target"),
    ("pushdist:<map>:<target>", "distance of F(x) to a codomain point"),
    ("fat:<margin>:<rule>", "max(0, g - margin)"),
    ("sum:<w>*<rule>;<w>*<rule>", "non-negative weighted sum"),
];

const MAPS: &[(&str, &str)] = &[
    ("identity", "F(x) = x"),
    ("proj:<coords>", "coordinate projection, 1-based"),
    ("linear:[[..]]", "x -> A x with a flat codomain"),
    ("shear:<a>", "(x, y) -> (x + a sin 2 pi y, y) on T^2"),
    ("twist:<a>", "(x, y) -> x + a sin 2 pi y on T^2"),
    ("const:<values>", "constant map"),
];

const TEST_FUNCTIONS: &[(&str, &str)] = &[
    ("obs:<rule>", "an observable"),
    ("cos:<coord>:<freq>", "cos(2 pi freq x_coord), 1-based coordinate"),
    ("hat:<center>:<width>", "tent of the given width"),
    ("moll:<r_prev>:<r>:<rule>", "Lipschitz mollifier of the sublevel indicator"),
    ("const:<c>", "constant"),
];

pub const KINDS: &[&str] = &[
    "dimension",
    "hitting",
    "borel-cantelli",
    "correlation",
    "intersection-bound",
    "return-stats",
    "observed",
    "flow-analogue",
];

fn entries(list: &[(&str, &str)]) -> Value {
    Value::Array(list.iter().map(|(id, d)| json!({ "id": id, "description": d })).collect())
}

pub fn catalog() -> Value {
    let systems: Vec<Value> = SYSTEMS
        .iter()
        .map(|(id, desc)| {
            // Instantiate a representative to report its metadata.
            let sample = match *id {
                "toral:[[a,b],[c,d]]" => "cat",
                "rotation:<decimal>" => "rotation:0.1",
                "mp:<s>" => "mp:0.5",
                other => other,
            };
            let spec = SystemSpec::from_id(sample, 512).expect("catalog entries parse");
            json!({
                "id": id,
                "description": desc,
                "mixing_class": spec.mixing_class().to_string(),
                "exact": !spec.is_float_engine(),
                "caveat": spec.is_float_engine().then_some("double-precision orbits; results are not rigorous"),
            })
        })
        .collect();
    json!({
        "systems": systems,
        "observables": entries(OBSERVABLES),
        "maps": entries(MAPS),
        "test_functions": entries(TEST_FUNCTIONS),
        "kinds": KINDS,
    })
}
