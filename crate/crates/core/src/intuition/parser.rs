//! Tokenizer and statement parser for `.net` intuition files.
//!
//! The parser only checks syntax and produces [`RawNet`]; semantic checks
//! (cycles, CPT coverage, normalization, action mapping) happen in
//! [`super::net::IntuitionNet::from_raw`].

use crate::error::NetError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    Sym(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> NetError {
    NetError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>, NetError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (lno, col) = (li + 1, i + 1);
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let push = |tok, out: &mut Vec<Token>| out.push(Token { tok, line: lno, column: col });
            if c == '-' && chars.get(i + 1) == Some(&'>') {
                push(Tok::Sym("->"), &mut out);
                i += 2;
                continue;
            }
            if let Some(sym) = ["{", "}", "[", "]", "(", ")", ",", ":", "=", "|"].iter().find(|s| s.starts_with(c)) {
                push(Tok::Sym(sym), &mut out);
                i += 1;
                continue;
            }
            if c == '"' {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' {
                    j += 1;
                }
                if j == chars.len() {
                    return Err(syntax(lno, col, "unterminated string"));
                }
                push(Tok::Str(chars[start..j].iter().collect()), &mut out);
                i = j + 1;
                continue;
            }
            if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' {
                let mut j = i + 1;
                while j < chars.len() {
                    let d = chars[j];
                    let exp_sign = (d == '-' || d == '+') && matches!(chars[j - 1], 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let s: String = chars[i..j].iter().collect();
                let v: f64 = s.parse().map_err(|_| syntax(lno, col, format!("invalid number `{s}`")))?;
                push(Tok::Num(v), &mut out);
                i = j;
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                push(Tok::Ident(chars[i..j].iter().collect()), &mut out);
                i = j;
                continue;
            }
            return Err(syntax(lno, col, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

/// `node=state` pair with the position it was written at.
#[derive(Debug, Clone, PartialEq)]
pub struct Assign {
    pub node: String,
    pub state: String,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawNode {
    pub name: String,
    pub action: bool,
    pub states: Vec<String>,
    pub parents: Vec<String>,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawCpt {
    pub node: String,
    pub given: Vec<Assign>,
    pub probs: Vec<f64>,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawWeight {
    pub target: Assign,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawMapTarget {
    Action(String),
    /// Choose among candidates by the larger marginal posterior of `node=state`.
    ByMarginal(Vec<(Assign, String)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawMap {
    pub config: Vec<Assign>,
    pub target: RawMapTarget,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawNet {
    pub name: String,
    pub env: String,
    pub nodes: Vec<RawNode>,
    pub cpts: Vec<RawCpt>,
    pub weights: Vec<RawWeight>,
    pub maps: Vec<RawMap>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.column)).unwrap_or(self.end)
    }

    fn err(&self, message: impl Into<String>) -> NetError {
        let (l, c) = self.here();
        syntax(l, c, message)
    }

    fn sym(&mut self, s: &'static str) -> Result<(), NetError> {
        match self.peek() {
            Some(Token { tok: Tok::Sym(x), .. }) if *x == s => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected `{s}`"))),
        }
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(x), .. }) if *x == s)
    }

    fn at_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Ident(x), .. }) if x == s)
    }

    fn ident(&mut self, what: &str) -> Result<Token, NetError> {
        match self.peek() {
            Some(t @ Token { tok: Tok::Ident(_), .. }) => {
                let t = t.clone();
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn name(&mut self, what: &str) -> Result<String, NetError> {
        match self.ident(what)?.tok {
            Tok::Ident(s) => Ok(s),
            _ => unreachable!(),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), NetError> {
        if self.at_ident(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{kw}`")))
        }
    }

    fn string(&mut self, what: &str) -> Result<String, NetError> {
        match self.peek() {
            Some(Token { tok: Tok::Str(s), .. }) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(format!("expected quoted {what}"))),
        }
    }

    fn number(&mut self) -> Result<f64, NetError> {
        match self.peek() {
            Some(Token { tok: Tok::Num(v), .. }) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err("expected number")),
        }
    }

    fn name_list(&mut self) -> Result<Vec<String>, NetError> {
        self.sym("[")?;
        let mut out = Vec::new();
        if self.at_sym("]") {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.name("identifier")?);
            if self.at_sym(",") {
                self.pos += 1;
            } else {
                self.sym("]")?;
                return Ok(out);
            }
        }
    }

    fn number_list(&mut self) -> Result<Vec<f64>, NetError> {
        self.sym("[")?;
        let mut out = vec![self.number()?];
        while self.at_sym(",") {
            self.pos += 1;
            out.push(self.number()?);
        }
        self.sym("]")?;
        Ok(out)
    }

    fn assign(&mut self) -> Result<Assign, NetError> {
        let t = self.ident("node name")?;
        let node = match t.tok {
            Tok::Ident(s) => s,
            _ => unreachable!(),
        };
        self.sym("=")?;
        let state = self.name("state label")?;
        Ok(Assign {
            node,
            state,
            line: t.line,
            column: t.column,
        })
    }

    fn node(&mut self, line: usize, column: usize) -> Result<RawNode, NetError> {
        let name = self.name("node name")?;
        let action = if self.at_ident("action") {
            self.pos += 1;
            true
        } else {
            false
        };
        self.sym("{")?;
        self.keyword("states")?;
        self.sym(":")?;
        let states = self.name_list()?;
        let mut parents = Vec::new();
        if self.at_sym(",") {
            self.pos += 1;
            self.keyword("parents")?;
            self.sym(":")?;
            parents = self.name_list()?;
        }
        self.sym("}")?;
        Ok(RawNode {
            name,
            action,
            states,
            parents,
            line,
            column,
        })
    }

    fn cpt(&mut self, line: usize, column: usize) -> Result<RawCpt, NetError> {
        let node = self.name("node name")?;
        let mut given = Vec::new();
        if self.at_sym("|") {
            self.pos += 1;
            given.push(self.assign()?);
            while self.at_sym(",") {
                self.pos += 1;
                given.push(self.assign()?);
            }
        }
        self.sym("->")?;
        let probs = self.number_list()?;
        Ok(RawCpt {
            node,
            given,
            probs,
            line,
            column,
        })
    }

    fn map(&mut self, line: usize, column: usize) -> Result<RawMap, NetError> {
        self.sym("(")?;
        let mut config = vec![self.assign()?];
        while self.at_sym(",") {
            self.pos += 1;
            config.push(self.assign()?);
        }
        self.sym(")")?;
        self.sym("->")?;
        let target = if self.at_ident("max") && matches!(self.toks.get(self.pos + 1), Some(Token { tok: Tok::Sym("("), .. })) {
            self.pos += 2;
            let mut cands = Vec::new();
            loop {
                let a = self.assign()?;
                self.sym(":")?;
                cands.push((a, self.name("environment action")?));
                if self.at_sym(",") {
                    self.pos += 1;
                } else {
                    self.sym(")")?;
                    break;
                }
            }
            RawMapTarget::ByMarginal(cands)
        } else {
            RawMapTarget::Action(self.name("environment action")?)
        };
        Ok(RawMap {
            config,
            target,
            line,
            column,
        })
    }
}

/// Parse `.net` text into its raw statements.
pub fn parse_raw(text: &str) -> Result<RawNet, NetError> {
    let toks = tokenize(text)?;
    let n_lines = text.lines().count().max(1);
    let mut p = Parser {
        toks,
        pos: 0,
        end: (n_lines, text.lines().last().map_or(1, |l| l.chars().count() + 1)),
    };
    let mut net = RawNet::default();
    let mut header = false;
    while p.peek().is_some() {
        let kw = p.ident("statement keyword (net, node, cpt, weight, map)")?;
        let (line, column) = (kw.line, kw.column);
        let Tok::Ident(word) = kw.tok else { unreachable!() };
        if !header && word != "net" {
            return Err(syntax(line, column, "file must start with a `net \"<name>\" env \"<env>\"` header"));
        }
        match word.as_str() {
            "net" => {
                if header {
                    return Err(syntax(line, column, "duplicate `net` header"));
                }
                net.name = p.string("net name")?;
                p.keyword("env")?;
                net.env = p.string("environment name")?;
                header = true;
            }
            "node" => net.nodes.push(p.node(line, column)?),
            "cpt" => net.cpts.push(p.cpt(line, column)?),
            "weight" => {
                let target = p.assign()?;
                p.sym("->")?;
                let weight = p.number()?;
                net.weights.push(RawWeight { target, weight });
            }
            "map" => net.maps.push(p.map(line, column)?),
            other => return Err(syntax(line, column, format!("unknown statement `{other}`"))),
        }
    }
    if !header {
        return Err(syntax(1, 1, "empty net file"));
    }
    Ok(net)
}
