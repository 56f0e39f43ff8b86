//! Text to IR. Tokens are whitespace separated; line breaks only matter for
//! an optional `ret` operand, which must sit on the `ret` line.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::{
    Block, BlockId, Function, Guard, Inst, Module, OpInst, Opcode, Operand, PhiInst, Pred, PsiArg, PsiInst, Terminator, Var, VarKind,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl core::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Reg(String),
    Func(String),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Eq,
    Question,
    Bang,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Reg(s) => write!(f, "`%{s}`"),
            Tok::Func(s) => write!(f, "`@{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Question => f.write_str("`?`"),
            Tok::Bang => f.write_str("`!`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (line, col) = (lineno + 1, i + 1);
            let err = |message: String| ParseError { line, col, message };
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let single = match c {
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                '{' => Some(Tok::LBrace),
                '}' => Some(Tok::RBrace),
                ',' => Some(Tok::Comma),
                ':' => Some(Tok::Colon),
                '=' => Some(Tok::Eq),
                '?' => Some(Tok::Question),
                '!' => Some(Tok::Bang),
                _ => None,
            };
            if let Some(tok) = single {
                out.push(Token { tok, line, col });
                i += 1;
                continue;
            }
            if c == '%' || c == '@' {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                if j == start {
                    return Err(err(format!("expected a name after `{c}`")));
                }
                let name: String = chars[start..j].iter().collect();
                let tok = if c == '%' { Tok::Reg(name) } else { Tok::Func(name) };
                out.push(Token { tok, line, col });
                i = j;
                continue;
            }
            if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j < chars.len() && is_ident_char(chars[j]) {
                    return Err(err("malformed integer literal".to_string()));
                }
                let digits: String = chars[i..j].iter().collect();
                let n = digits.parse::<i64>().map_err(|_| err(format!("integer literal `{digits}` out of range")))?;
                out.push(Token { tok: Tok::Int(n), line, col });
                i = j;
                continue;
            }
            if is_ident_start(c) {
                let mut j = i + 1;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                out.push(Token { tok: Tok::Ident(chars[i..j].iter().collect()), line, col });
                i = j;
                continue;
            }
            return Err(err(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

// Unresolved syntax, names still textual.

#[derive(Clone, Debug)]
struct RawGuard {
    reg: String,
    negated: bool,
}

#[derive(Clone, Debug)]
enum RawPred {
    True,
    Reg(RawGuard),
}

#[derive(Clone, Debug)]
enum RawOperand {
    Reg(String),
    Imm(i64),
}

#[derive(Clone, Debug)]
enum RawInst {
    Op { dst: Option<String>, opcode: Opcode, operands: Vec<RawOperand> },
    Phi { dst: String, args: Vec<(String, usize, usize, String)> },
    Psi { dst: String, args: Vec<(RawPred, String)> },
}

#[derive(Clone, Debug)]
enum RawTerm {
    Br(String, (String, usize, usize), (String, usize, usize)),
    Goto(String, usize, usize),
    Ret(Option<String>),
}

#[derive(Clone, Debug)]
struct RawLine {
    guard: Option<RawGuard>,
    inst: RawInst,
    line: usize,
    col: usize,
}

#[derive(Clone, Debug)]
struct RawBlock {
    name: String,
    lines: Vec<RawLine>,
    term: RawTerm,
}

#[derive(Clone, Debug)]
struct RawFunc {
    name: String,
    params: Vec<(String, bool)>,
    blocks: Vec<RawBlock>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    last_line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos) {
            Some(t) => (t.line, t.col),
            None => (self.last_line + 1, 1),
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError { line, col, message: message.into() })
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, ParseError> {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {t}")),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.unexpected(&tok.to_string())
        }
    }

    fn reg(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Reg(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => self.unexpected("a register"),
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize), ParseError> {
        let (line, col) = self.here();
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok((name, line, col))
            }
            _ => self.unexpected("a block name"),
        }
    }

    fn module(&mut self) -> Result<Vec<RawFunc>, ParseError> {
        let mut funcs = Vec::new();
        while self.peek().is_some() {
            funcs.push(self.func()?);
        }
        Ok(funcs)
    }

    fn func(&mut self) -> Result<RawFunc, ParseError> {
        match self.peek() {
            Some(Tok::Ident(kw)) if kw == "func" => self.pos += 1,
            _ => return self.unexpected("`func`"),
        }
        let name = match self.next() {
            Some(Token { tok: Tok::Func(name), .. }) => name,
            _ => {
                self.pos = self.pos.saturating_sub(1);
                return self.unexpected("a function name");
            }
        };
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                let p = self.reg()?;
                let mut guard = false;
                if self.peek() == Some(&Tok::Colon) {
                    self.pos += 1;
                    match self.peek() {
                        Some(Tok::Ident(k)) if k == "guard" => {
                            self.pos += 1;
                            guard = true;
                        }
                        _ => return self.unexpected("`guard`"),
                    }
                }
                params.push((p, guard));
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::LBrace)?;
        let mut blocks = Vec::new();
        while self.peek() != Some(&Tok::RBrace) {
            blocks.push(self.block()?);
        }
        if blocks.is_empty() {
            return self.error("function has no blocks");
        }
        self.expect(Tok::RBrace)?;
        Ok(RawFunc { name, params, blocks })
    }

    fn block(&mut self) -> Result<RawBlock, ParseError> {
        let (name, _, _) = self.ident()?;
        self.expect(Tok::Colon)?;
        let mut lines = Vec::new();
        loop {
            match (self.peek(), self.peek_at(1)) {
                (None, _) | (Some(Tok::RBrace), _) => {
                    return self.error(format!("block `{name}` has no terminator"));
                }
                (Some(Tok::Ident(_)), Some(Tok::Colon)) => {
                    return self.error(format!("block `{name}` has no terminator"));
                }
                (Some(Tok::Ident(kw)), _) if kw == "br" || kw == "goto" || kw == "ret" => {
                    let term = self.terminator()?;
                    match (self.peek(), self.peek_at(1)) {
                        (None, _) | (Some(Tok::RBrace), _) | (Some(Tok::Ident(_)), Some(Tok::Colon)) => {}
                        _ => return self.error(format!("instruction after the terminator of block `{name}`")),
                    }
                    return Ok(RawBlock { name, lines, term });
                }
                _ => lines.push(self.line()?),
            }
        }
    }

    fn terminator(&mut self) -> Result<RawTerm, ParseError> {
        let tok = self.next().unwrap();
        let Tok::Ident(kw) = tok.tok else { unreachable!() };
        match kw.as_str() {
            "br" => {
                let cond = self.reg()?;
                self.expect(Tok::Comma)?;
                let t = self.ident()?;
                self.expect(Tok::Comma)?;
                let e = self.ident()?;
                Ok(RawTerm::Br(cond, t, e))
            }
            "goto" => {
                let (b, l, c) = self.ident()?;
                Ok(RawTerm::Goto(b, l, c))
            }
            _ => match self.toks.get(self.pos) {
                Some(Token { tok: Tok::Reg(name), line, .. }) if *line == tok.line => {
                    let name = name.clone();
                    self.pos += 1;
                    Ok(RawTerm::Ret(Some(name)))
                }
                _ => Ok(RawTerm::Ret(None)),
            },
        }
    }

    fn pred(&mut self) -> Result<RawPred, ParseError> {
        match self.peek() {
            Some(Tok::Int(1)) => {
                self.pos += 1;
                Ok(RawPred::True)
            }
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(RawPred::Reg(RawGuard { reg: self.reg()?, negated: true }))
            }
            Some(Tok::Reg(_)) => Ok(RawPred::Reg(RawGuard { reg: self.reg()?, negated: false })),
            _ => self.unexpected("a predicate"),
        }
    }

    fn line(&mut self) -> Result<RawLine, ParseError> {
        let (line, col) = self.here();
        let has_guard = matches!(
            (self.peek(), self.peek_at(1), self.peek_at(2)),
            (Some(Tok::Int(1)), Some(Tok::Question), _)
                | (Some(Tok::Reg(_)), Some(Tok::Question), _)
                | (Some(Tok::Bang), Some(Tok::Reg(_)), Some(Tok::Question))
        );
        let guard = if has_guard {
            let p = self.pred()?;
            self.expect(Tok::Question)?;
            match p {
                RawPred::True => None,
                RawPred::Reg(g) => Some(g),
            }
        } else {
            None
        };
        if let Some(Tok::Ident(kw)) = self.peek() {
            if kw == "store" {
                self.pos += 1;
                let operands = self.operands()?;
                return Ok(RawLine { guard, inst: RawInst::Op { dst: None, opcode: Opcode::Store, operands }, line, col });
            }
            if kw == "br" || kw == "goto" || kw == "ret" {
                return self.error("terminators cannot be guarded");
            }
        }
        let dst = self.reg()?;
        self.expect(Tok::Eq)?;
        let (oline, ocol) = self.here();
        let (op, _, _) = match self.peek() {
            Some(Tok::Ident(_)) => self.ident()?,
            _ => return self.unexpected("an opcode"),
        };
        let inst = match op.as_str() {
            "phi" => {
                self.expect(Tok::LParen)?;
                let mut args = Vec::new();
                loop {
                    let (b, l, c) = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let v = self.reg()?;
                    args.push((b, l, c, v));
                    if self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
                RawInst::Phi { dst, args }
            }
            "psi" => {
                self.expect(Tok::LParen)?;
                let mut args = Vec::new();
                loop {
                    let p = self.pred()?;
                    self.expect(Tok::Question)?;
                    let v = self.reg()?;
                    args.push((p, v));
                    if self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
                RawInst::Psi { dst, args }
            }
            name => {
                let Some(opcode) = Opcode::from_name(name).filter(|o| *o != Opcode::Store) else {
                    return Err(ParseError { line: oline, col: ocol, message: format!("unknown opcode `{name}`") });
                };
                let operands = self.operands()?;
                if operands.len() != opcode.arity() {
                    return Err(ParseError {
                        line: oline,
                        col: ocol,
                        message: format!("`{name}` takes {} operand(s), found {}", opcode.arity(), operands.len()),
                    });
                }
                RawInst::Op { dst: Some(dst), opcode, operands }
            }
        };
        Ok(RawLine { guard, inst, line, col })
    }

    fn operands(&mut self) -> Result<Vec<RawOperand>, ParseError> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Reg(_)) => out.push(RawOperand::Reg(self.reg()?)),
                Some(Tok::Int(n)) => {
                    out.push(RawOperand::Imm(*n));
                    self.pos += 1;
                }
                _ => return self.unexpected("an operand"),
            }
            if self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
            } else {
                return Ok(out);
            }
        }
    }
}

/// Union-find over names used to infer which registers are guards.
struct KindSolver {
    ids: BTreeMap<String, usize>,
    parent: Vec<usize>,
    guard: Vec<bool>,
}

impl KindSolver {
    fn id(&mut self, name: &str) -> usize {
        if let Some(&i) = self.ids.get(name) {
            return i;
        }
        let i = self.parent.len();
        self.parent.push(i);
        self.guard.push(false);
        self.ids.insert(name.to_string(), i);
        i
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn unify(&mut self, a: &str, b: &str) {
        let (a, b) = (self.id(a), self.id(b));
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
            self.guard[rb] |= self.guard[ra];
        }
    }

    fn mark(&mut self, name: &str) {
        let i = self.id(name);
        let r = self.find(i);
        self.guard[r] = true;
    }

    fn is_guard(&mut self, name: &str) -> bool {
        let i = self.id(name);
        let r = self.find(i);
        self.guard[r]
    }
}

fn infer_kinds(raw: &RawFunc) -> KindSolver {
    let mut s = KindSolver { ids: BTreeMap::new(), parent: Vec::new(), guard: Vec::new() };
    for (p, g) in &raw.params {
        s.id(p);
        if *g {
            s.mark(p);
        }
    }
    for block in &raw.blocks {
        for line in &block.lines {
            if let Some(g) = &line.guard {
                s.mark(&g.reg);
            }
            match &line.inst {
                RawInst::Op { dst, opcode, operands } => {
                    let regs: Vec<&String> = operands
                        .iter()
                        .filter_map(|o| match o {
                            RawOperand::Reg(r) => Some(r),
                            RawOperand::Imm(_) => None,
                        })
                        .collect();
                    for r in &regs {
                        s.id(r);
                    }
                    if let Some(d) = dst {
                        s.id(d);
                        match opcode {
                            Opcode::Mov | Opcode::And | Opcode::Or | Opcode::Not => {
                                for r in &regs {
                                    s.unify(d, r);
                                }
                            }
                            Opcode::CmpEq | Opcode::CmpLt | Opcode::CmpLe => s.mark(d),
                            Opcode::Select => {
                                if let RawOperand::Reg(c) = &operands[0] {
                                    s.mark(c);
                                }
                                for o in &operands[1..] {
                                    if let RawOperand::Reg(r) = o {
                                        s.unify(d, r);
                                    }
                                }
                            }
                            _ => {}
                        }
                    }
                }
                RawInst::Phi { dst, args } => {
                    s.id(dst);
                    for (_, _, _, v) in args {
                        s.unify(dst, v);
                    }
                }
                RawInst::Psi { dst, args } => {
                    s.id(dst);
                    for (p, v) in args {
                        if let RawPred::Reg(g) = p {
                            s.mark(&g.reg);
                        }
                        s.unify(dst, v);
                    }
                }
            }
        }
        match &block.term {
            RawTerm::Br(c, _, _) => s.mark(c),
            RawTerm::Ret(Some(v)) => {
                s.id(v);
            }
            _ => {}
        }
    }
    s
}

fn resolve(raw: RawFunc) -> Result<Function, ParseError> {
    let mut kinds = infer_kinds(&raw);
    let mut f = Function::new(raw.name.clone());
    let mut kind_of = |name: &str| if kinds.is_guard(name) { VarKind::Guard } else { VarKind::Value };
    let mut block_ids: BTreeMap<String, BlockId> = BTreeMap::new();
    for (i, b) in raw.blocks.iter().enumerate() {
        if block_ids.insert(b.name.clone(), BlockId(i as u32)).is_some() {
            return Err(ParseError { line: 0, col: 0, message: format!("duplicate block `{}` in @{}", b.name, raw.name) });
        }
    }
    let lookup_block = |name: &str, line: usize, col: usize| -> Result<BlockId, ParseError> {
        block_ids.get(name).copied().ok_or_else(|| ParseError { line, col, message: format!("undefined block {name}") })
    };
    let mut var = |f: &mut Function, name: &str| -> Var {
        let k = kind_of(name);
        f.intern(name, k)
    };
    for (p, _) in &raw.params {
        if f.lookup(p).is_some() {
            return Err(ParseError { line: 0, col: 0, message: format!("duplicate parameter `%{p}`") });
        }
        let v = var(&mut f, p);
        f.params.push(v);
    }
    for rb in &raw.blocks {
        let mut block = Block::new(rb.name.clone(), Terminator::Ret(None));
        for line in &rb.lines {
            let guard = line.guard.as_ref().map(|g| Guard { var: var(&mut f, &g.reg), negated: g.negated });
            match &line.inst {
                RawInst::Phi { dst, args } => {
                    if guard.is_some() {
                        return Err(ParseError { line: line.line, col: line.col, message: "phi cannot be guarded".into() });
                    }
                    if !block.insts.is_empty() {
                        return Err(ParseError {
                            line: line.line,
                            col: line.col,
                            message: "phi must precede all other instructions of its block".into(),
                        });
                    }
                    let dst = var(&mut f, dst);
                    let mut resolved = Vec::new();
                    for (b, l, c, v) in args {
                        let b = lookup_block(b, *l, *c)?;
                        if resolved.iter().any(|(p, _)| *p == b) {
                            return Err(ParseError { line: *l, col: *c, message: "phi lists a predecessor twice".into() });
                        }
                        resolved.push((b, var(&mut f, v)));
                    }
                    block.phis.push(PhiInst { dst, args: resolved });
                }
                RawInst::Psi { dst, args } => {
                    let dst = var(&mut f, dst);
                    let args = args
                        .iter()
                        .map(|(p, v)| {
                            let pred = match p {
                                RawPred::True => Pred::True,
                                RawPred::Reg(g) => Pred::Guard(Guard { var: var(&mut f, &g.reg), negated: g.negated }),
                            };
                            PsiArg { pred, value: var(&mut f, v) }
                        })
                        .collect();
                    block.insts.push(Inst::Psi(PsiInst { guard, dst, args }));
                }
                RawInst::Op { dst, opcode, operands } => {
                    let dst = dst.as_ref().map(|d| var(&mut f, d));
                    let operands = operands
                        .iter()
                        .map(|o| match o {
                            RawOperand::Reg(r) => Operand::Var(var(&mut f, r)),
                            RawOperand::Imm(n) => Operand::Imm(*n),
                        })
                        .collect();
                    block.insts.push(Inst::Op(OpInst { guard, dst, opcode: *opcode, operands }));
                }
            }
        }
        block.term = match &rb.term {
            RawTerm::Br(c, (t, tl, tc), (e, el, ec)) => {
                Terminator::Br { cond: var(&mut f, c), then_dest: lookup_block(t, *tl, *tc)?, else_dest: lookup_block(e, *el, *ec)? }
            }
            RawTerm::Goto(b, l, c) => Terminator::Goto(lookup_block(b, *l, *c)?),
            RawTerm::Ret(v) => Terminator::Ret(v.as_ref().map(|v| var(&mut f, v))),
        };
        f.add_block(block);
    }
    Ok(f)
}

/// Parses a module. Register kinds (value or guard) are inferred from use.
pub fn parse_module(text: &str) -> Result<Module, ParseError> {
    let toks = lex(text)?;
    let last_line = toks.last().map_or(0, |t| t.line);
    let mut p = Parser { toks, pos: 0, last_line };
    let raw = p.module()?;
    let mut m = Module::default();
    for rf in raw {
        if m.function(&rf.name).is_some() {
            return Err(ParseError { line: 0, col: 0, message: format!("duplicate function @{}", rf.name) });
        }
        m.functions.push(resolve(rf)?);
    }
    Ok(m)
}

/// Parses text holding exactly one function.
pub fn parse_function(text: &str) -> Result<Function, ParseError> {
    let mut m = parse_module(text)?;
    if m.functions.len() != 1 {
        return Err(ParseError { line: 0, col: 0, message: format!("expected exactly one function, found {}", m.functions.len()) });
    }
    Ok(m.functions.pop().unwrap())
}
