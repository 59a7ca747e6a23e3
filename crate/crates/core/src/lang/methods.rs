//! Built-in functions and methods. The registry is open: embedders can add
//! methods without touching the grammar.

use std::cell::RefCell;
use std::collections::HashMap;

use super::interp::{Fault, FaultKind, Interpreter, Interrupt};
use super::value::{TypeTag, Value};

#[derive(Debug, Default)]
pub struct CallArgs {
    pub positional: Vec<Value>,
    pub keywords: Vec<(String, Value)>,
}

impl CallArgs {
    /// Checks positional arity and rejects keywords outside `allowed`.
    pub fn expect(&self, name: &str, min: usize, max: usize, allowed: &[&str]) -> Result<(), Fault> {
        let n = self.positional.len();
        if n < min || n > max {
            let want = if min == max {
                format!("{min}")
            } else {
                format!("{min} to {max}")
            };
            return Err(Fault::type_mismatch(format!(
                "{name}() takes {want} positional arguments ({n} given)"
            )));
        }
        if let Some((k, _)) = self.keywords.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(Fault::type_mismatch(format!(
                "{name}() got an unexpected keyword argument '{k}'"
            )));
        }
        Ok(())
    }

    pub fn keyword(&self, name: &str) -> Option<&Value> {
        self.keywords.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }
}

pub type MethodFn = fn(&mut Interpreter<'_>, &Value, CallArgs) -> Result<Value, Interrupt>;

#[derive(Default)]
pub struct MethodRegistry {
    methods: HashMap<(TypeTag, String), MethodFn>,
    functions: HashMap<String, MethodFn>,
}

impl std::fmt::Debug for MethodRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut names: Vec<String> = self
            .methods
            .keys()
            .map(|(t, n)| format!("{}.{n}", t.name()))
            .chain(self.functions.keys().cloned())
            .collect();
        names.sort();
        f.debug_struct("MethodRegistry").field("entries", &names).finish()
    }
}

impl MethodRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `len`, plus the str, list and dict methods used by the corpus.
    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register_function("len", builtin_len);
        r.register(TypeTag::Str, "endswith", str_endswith);
        r.register(TypeTag::Str, "startswith", str_startswith);
        r.register(TypeTag::Str, "replace", str_replace);
        r.register(TypeTag::Str, "format", str_format);
        r.register(TypeTag::Str, "lower", str_lower);
        r.register(TypeTag::Str, "upper", str_upper);
        r.register(TypeTag::Str, "split", str_split);
        r.register(TypeTag::List, "append", list_append);
        r.register(TypeTag::List, "sort", list_sort);
        r.register(TypeTag::Dict, "get", dict_get);
        r.register(TypeTag::Dict, "keys", dict_keys);
        r.register(TypeTag::Dict, "values", dict_values);
        r.register(TypeTag::Dict, "items", dict_items);
        r
    }

    pub fn register(&mut self, receiver: TypeTag, name: &str, f: MethodFn) {
        self.methods.insert((receiver, name.to_string()), f);
    }

    pub fn register_function(&mut self, name: &str, f: MethodFn) {
        self.functions.insert(name.to_string(), f);
    }

    pub fn method(&self, receiver: TypeTag, name: &str) -> Option<MethodFn> {
        self.methods.get(&(receiver, name.to_string())).copied()
    }

    pub fn function(&self, name: &str) -> Option<MethodFn> {
        self.functions.get(name).copied()
    }

    pub fn has_function(&self, name: &str) -> bool {
        self.functions.contains_key(name)
    }
}

fn receiver_str(v: &Value) -> &str {
    match v {
        Value::Str(s) => s,
        _ => unreachable!("registered for str"),
    }
}

fn str_arg<'v>(method: &str, v: &'v Value) -> Result<&'v str, Fault> {
    match v {
        Value::Str(s) => Ok(s),
        other => Err(Fault::type_mismatch(format!(
            "{method}() argument must be str, not {}",
            other.type_name()
        ))),
    }
}

fn builtin_len(_: &mut Interpreter<'_>, _: &Value, args: CallArgs) -> Result<Value, Interrupt> {
    args.expect("len", 1, 1, &[])?;
    let n = match &args.positional[0] {
        Value::Str(s) => s.chars().count(),
        Value::List(l) => l.borrow().len(),
        Value::Tuple(t) => t.len(),
        Value::Dict(d) => d.borrow().len(),
        other => {
            return Err(Fault::type_mismatch(format!(
                "object of type '{}' has no len()",
                other.type_name()
            ))
            .into())
        }
    };
    Ok(Value::Int(n as i64))
}

fn affix_test(
    name: &str,
    recv: &Value,
    args: CallArgs,
    test: fn(&str, &str) -> bool,
) -> Result<Value, Interrupt> {
    args.expect(name, 1, 1, &[])?;
    let s = receiver_str(recv);
    let hit = match &args.positional[0] {
        Value::Tuple(options) => {
            let mut any = false;
            for o in options.iter() {
                any |= test(s, str_arg(name, o)?);
            }
            any
        }
        other => test(s, str_arg(name, other)?),
    };
    Ok(Value::Bool(hit))
}

fn str_endswith(_: &mut Interpreter<'_>, recv: &Value, args: CallArgs) -> Result<Value, Interrupt> {
    affix_test("endswith", recv, args, |s, x| s.ends_with(x))
}

fn str_startswith(_: &mut Interpreter<'_>, recv: &Value, args: CallArgs) -> Result<Value, Interrupt> {
    affix_test("startswith", recv, args, |s, x| s.starts_with(x))
}

fn str_replace(it: &mut Interpreter<'_>, recv: &Value, args: CallArgs) -> Result<Value, Interrupt> {
    args.expect("replace", 2, 2, &[])?;
    let old = str_arg("replace", &args.positional[0])?;
    let new = str_arg("replace", &args.positional[1])?;
    let s = receiver_str(recv);
    let out = if old.is_empty() {
        // Python inserts `new` between every character and at both ends.
        let mut out = String::from(new);
        for c in s.chars() {
            out.push(c);
            out.push_str(new);
            it.check_str(&out)?;
        }
        out
    } else {
        s.replace(old, new)
    };
    Ok(it.new_str(out)?)
}

fn str_format(it: &mut Interpreter<'_>, recv: &Value, args: CallArgs) -> Result<Value, Interrupt> {
    if !args.keywords.is_empty() {
        return Err(Fault::type_mismatch("format() supports positional `{}` fields only").into());
    }
    let template: Vec<char> = receiver_str(recv).chars().collect();
    let mut out = String::new();
    let mut next = args.positional.iter();
    let mut i = 0;
    while i < template.len() {
        match (template[i], template.get(i + 1)) {
            ('{', Some('{')) | ('}', Some('}')) => {
                out.push(template[i]);
                i += 2;
            }
            ('{', Some('}')) => {
                let v = next
                    .next()
                    .ok_or_else(|| Fault::new(FaultKind::IndexOutOfRange, "not enough arguments for format string"))?;
                out.push_str(&v.py_str());
                it.check_str(&out)?;
                i += 2;
            }
            ('{' | '}', _) => {
                return Err(Fault::type_mismatch("format() supports positional `{}` fields only").into())
            }
            (c, _) => {
                out.push(c);
                i += 1;
            }
        }
    }
    Ok(it.new_str(out)?)
}

fn str_lower(_: &mut Interpreter<'_>, recv: &Value, args: CallArgs) -> Result<Value, Interrupt> {
    args.expect("lower", 0, 0, &[])?;
    Ok(Value::Str(receiver_str(recv).to_lowercase()))
}

fn str_upper(_: &mut Interpreter<'_>, recv: &Value, args: CallArgs) -> Result<Value, Interrupt> {
    args.expect("upper", 0, 0, &[])?;
    Ok(Value::Str(receiver_str(recv).to_uppercase()))
}

fn str_split(it: &mut Interpreter<'_>, recv: &Value, args: CallArgs) -> Result<Value, Interrupt> {
    args.expect("split", 0, 1, &["sep"])?;
    let sep = args.positional.first().or_else(|| args.keyword("sep"));
    let s = receiver_str(recv);
    let parts: Vec<Value> = match sep {
        None | Some(Value::Null) => s.split_whitespace().map(|p| Value::Str(p.into())).collect(),
        Some(v) => {
            let sep = str_arg("split", v)?;
            if sep.is_empty() {
                return Err(Fault::type_mismatch("empty separator").into());
            }
            s.split(sep).map(|p| Value::Str(p.into())).collect()
        }
    };
    Ok(it.new_list(parts)?)
}

fn receiver_list(v: &Value) -> &RefCell<Vec<Value>> {
    match v {
        Value::List(l) => l,
        _ => unreachable!("registered for list"),
    }
}

fn list_append(it: &mut Interpreter<'_>, recv: &Value, args: CallArgs) -> Result<Value, Interrupt> {
    args.expect("append", 1, 1, &[])?;
    let list = receiver_list(recv);
    let len = list.borrow().len() + 1;
    it.check_len(len)?;
    list.borrow_mut()
        .push(args.positional.into_iter().next().expect("one argument"));
    Ok(Value::Null)
}

fn list_sort(it: &mut Interpreter<'_>, recv: &Value, args: CallArgs) -> Result<Value, Interrupt> {
    args.expect("sort", 0, 0, &["key", "reverse"])?;
    let reverse = args.keyword("reverse").is_some_and(Value::truthy);
    let key = args.keyword("key").filter(|k| !matches!(k, Value::Null)).cloned();
    let items = receiver_list(recv).borrow().clone();
    let keys = match &key {
        Some(f) => {
            let mut keys = Vec::with_capacity(items.len());
            for item in &items {
                let call = CallArgs {
                    positional: vec![item.clone()],
                    keywords: Vec::new(),
                };
                keys.push(it.call_value(f, call)?);
            }
            keys
        }
        None => items.clone(),
    };
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut failure = None;
    // Stable sort; a reversed comparator keeps equal elements in input order,
    // which is what Python's `reverse=True` does.
    order.sort_by(|&a, &b| match keys[a].py_cmp(&keys[b]) {
        Some(o) if reverse => o.reverse(),
        Some(o) => o,
        None => {
            failure.get_or_insert_with(|| {
                Fault::type_mismatch(format!(
                    "'<' not supported between instances of '{}' and '{}'",
                    keys[a].type_name(),
                    keys[b].type_name()
                ))
            });
            std::cmp::Ordering::Equal
        }
    });
    if let Some(f) = failure {
        return Err(f.into());
    }
    *receiver_list(recv).borrow_mut() = order.into_iter().map(|i| items[i].clone()).collect();
    Ok(Value::Null)
}

fn dict_get(_: &mut Interpreter<'_>, recv: &Value, args: CallArgs) -> Result<Value, Interrupt> {
    args.expect("get", 1, 2, &[])?;
    let Value::Dict(map) = recv else {
        unreachable!("registered for dict")
    };
    let found = match &args.positional[0] {
        Value::Str(k) => map.borrow().get(k).cloned(),
        _ => None,
    };
    Ok(found.unwrap_or_else(|| args.positional.get(1).cloned().unwrap_or(Value::Null)))
}

fn dict_view(
    it: &mut Interpreter<'_>,
    name: &str,
    recv: &Value,
    args: CallArgs,
    f: fn(&String, &Value) -> Value,
) -> Result<Value, Interrupt> {
    args.expect(name, 0, 0, &[])?;
    let Value::Dict(map) = recv else {
        unreachable!("registered for dict")
    };
    let items = map.borrow().iter().map(|(k, v)| f(k, v)).collect();
    Ok(it.new_list(items)?)
}

fn dict_keys(it: &mut Interpreter<'_>, recv: &Value, args: CallArgs) -> Result<Value, Interrupt> {
    dict_view(it, "keys", recv, args, |k, _| Value::Str(k.clone()))
}

fn dict_values(it: &mut Interpreter<'_>, recv: &Value, args: CallArgs) -> Result<Value, Interrupt> {
    dict_view(it, "values", recv, args, |_, v| v.clone())
}

fn dict_items(it: &mut Interpreter<'_>, recv: &Value, args: CallArgs) -> Result<Value, Interrupt> {
    dict_view(it, "items", recv, args, |k, v| {
        Value::tuple(vec![Value::Str(k.clone()), v.clone()])
    })
}

#[cfg(test)]
mod tests {
    use serde_json::{json, Value as Json};

    use super::super::interp::{execute, execute_with, ApiDispatcher, DispatchError, ExecLimits};
    use super::super::parser::parse;
    use super::*;

    struct NoApi;

    impl ApiDispatcher for NoApi {
        fn call(&mut self, api: &str, _: serde_json::Map<String, Json>) -> Result<Json, DispatchError> {
            Err(DispatchError::UnknownApi(api.into()))
        }
    }

    fn ret(code: &str) -> Json {
        let out = execute(&parse(code).unwrap(), &mut NoApi, &ExecLimits::default()).unwrap();
        assert_eq!(out.error, None, "{code}");
        out.return_value
    }

    #[test]
    fn string_methods() {
        assert_eq!(ret("return \"a.txt\".endswith(\".txt\")"), json!(true));
        assert_eq!(ret("return \"a.txt\".endswith((\".rtf\", \".txt\"))"), json!(true));
        assert_eq!(ret("return \"sea_x\".startswith(\"land\")"), json!(false));
        assert_eq!(ret("return \"a.txt\".replace(\".txt\", \".rtf\")"), json!("a.rtf"));
        assert_eq!(ret("return \"ab\".replace(\"\", \"-\")"), json!("-a-b-"));
        assert_eq!(ret("return \"zoology-bucket/{}\".format(\"k\")"), json!("zoology-bucket/k"));
        assert_eq!(ret("return \"{{}} {}\".format([1])"), json!("{} [1]"));
        assert_eq!(ret("return \"AbC\".lower() + \"AbC\".upper()"), json!("abcABC"));
        assert_eq!(ret("return \" a  b \".split()"), json!(["a", "b"]));
        assert_eq!(ret("return \"a/b/c\".split(\"/\")"), json!(["a", "b", "c"]));
    }

    #[test]
    fn sort_is_stable_in_both_directions() {
        assert_eq!(
            ret("p = [(\"a\", 2), (\"b\", 1), (\"c\", 2)]\np.sort(key=lambda x: x[1], reverse=True)\nreturn p"),
            json!([["a", 2], ["c", 2], ["b", 1]])
        );
        assert_eq!(
            ret("p = [(\"a\", 2), (\"b\", 1), (\"c\", 2)]\np.sort(key=lambda x: x[1])\nreturn p"),
            json!([["b", 1], ["a", 2], ["c", 2]])
        );
        assert_eq!(ret("p = [3, 1, 2]\np.sort()\nreturn p"), json!([1, 2, 3]));
        let out = execute(&parse("p = [1, \"a\"]\np.sort()").unwrap(), &mut NoApi, &ExecLimits::default()).unwrap();
        assert_eq!(out.error.unwrap().name, "TypeMismatch");
    }

    #[test]
    fn dict_methods() {
        assert_eq!(ret("d = {\"a\": 1}\nreturn [d.get(\"a\"), d.get(\"b\"), d.get(\"b\", [])]"), json!([1, null, []]));
        assert_eq!(ret("d = {\"a\": 1, \"b\": 2}\nreturn [d.keys(), d.values(), d.items()]"), json!([["a", "b"], [1, 2], [["a", 1], ["b", 2]]]));
    }

    #[test]
    fn registry_is_extensible() {
        fn strip(_: &mut Interpreter<'_>, recv: &Value, args: CallArgs) -> Result<Value, Interrupt> {
            args.expect("strip", 0, 0, &[])?;
            let Value::Str(s) = recv else { unreachable!() };
            Ok(Value::Str(s.trim().to_string()))
        }
        let mut registry = MethodRegistry::standard();
        registry.register(TypeTag::Str, "strip", strip);
        let ast = parse("return \"  x \".strip()").unwrap();
        let out = execute_with(&ast, &mut NoApi, &ExecLimits::default(), &registry).unwrap();
        assert_eq!(out.return_value, json!("x"));
        let out = execute(&ast, &mut NoApi, &ExecLimits::default()).unwrap();
        assert_eq!(out.error.unwrap().name, "TypeMismatch");
    }
}
