""" Ciphertext-policy attribute-based encryption over BLS12-381.

Access trees are threshold gates over attribute strings.  The policy
travels in the clear with the ciphertext; the payload is sealed with
AES-256-GCM under a key derived from a random GT element that the tree
encapsulates.

Group placement (Type-III): attribute hashes, ``h`` and ``C`` live in G1
together with the key's ``D_j``; ``D``, ``D'_j`` and the leaf ``C_y``
live in G2.
"""
import functools
import hashlib
import logging
import random
import re
import secrets
import struct
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from py_ecc.bls.hash_to_curve import hash_to_G1
from py_ecc.bls.point_compression import compress_G1
from py_ecc.bls.point_compression import compress_G2
from py_ecc.bls.point_compression import decompress_G1
from py_ecc.bls.point_compression import decompress_G2
from py_ecc.optimized_bls12_381 import FQ12
from py_ecc.optimized_bls12_381 import G1
from py_ecc.optimized_bls12_381 import G2
from py_ecc.optimized_bls12_381 import add
from py_ecc.optimized_bls12_381 import b
from py_ecc.optimized_bls12_381 import b2
from py_ecc.optimized_bls12_381 import curve_order
from py_ecc.optimized_bls12_381 import field_modulus
from py_ecc.optimized_bls12_381 import final_exponentiate
from py_ecc.optimized_bls12_381 import is_inf
from py_ecc.optimized_bls12_381 import is_on_curve
from py_ecc.optimized_bls12_381 import multiply
from py_ecc.optimized_bls12_381 import neg
from py_ecc.optimized_bls12_381 import pairing

from typing import Any
from typing import Dict
from typing import FrozenSet
from typing import Iterable
from typing import List
from typing import Mapping
from typing import Optional
from typing import Tuple
from typing import Union

from loc_auth.errors import AbeError
from loc_auth.errors import IntegrityFailure
from loc_auth.errors import InvalidGroupElement
from loc_auth.errors import PolicyNotSatisfied
from loc_auth.errors import PolicySyntaxError
from loc_auth.errors import UnsupportedSecurityLevel

logger = logging.getLogger(__name__)

MIN_SECURITY_BITS = 100
MAX_SECURITY_BITS = 128
DEFAULT_SECURITY_BITS = 128
DEFAULT_WIDTH = 8
MAX_PAYLOAD = 1024

ATTR_DST = b"loc-auth/attr"
DEM_TAG = b"loc-auth/dem"
CT_VERSION = 0x01
PARAMS_VERSION = 0x01
KEY_VERSION = 0x01

GATE_TAG = 0x01
LEAF_TAG = 0x02
MAX_TREE_DEPTH = 64

G1_BYTES = 48
G2_BYTES = 96
GT_BYTES = 12 * 48
SCALAR_BYTES = 32
NONCE_BYTES = 12

COMPARATORS = ("<", "<=", ">", ">=", "==")

Point = Tuple[Any, Any, Any]
Rng = random.Random


# ----------------------------------------------------------------------
# attributes and access trees

_NUMERIC_RE = re.compile(r"(?P<name>[^=]+)=(?P<value>\d+)")
_BIT_RE = re.compile(r".*:bit\d+$")


def canonical_attribute(name: str) -> str:
    attr = name.strip().lower()
    if not attr or any(ch.isspace() for ch in attr):
        raise AbeError(f"invalid attribute: {name!r}")
    return attr


def numeric_attributes(name: str, value: int,
                       width: int = DEFAULT_WIDTH) -> FrozenSet[str]:
    if not 0 <= value < 2 ** width:
        raise AbeError(f"{name}={value} outside {width}-bit range")
    name = canonical_attribute(name)
    return frozenset(f"{name}:bit{i}={(value >> i) & 1}"
                     for i in range(width))


def expand_attributes(attrs: Iterable[str],
                      width: int = DEFAULT_WIDTH) -> FrozenSet[str]:
    """ Canonicalize attributes, turning ``name=value`` into bit attributes.

    ``clearance=4`` becomes the ``width`` attributes ``clearance:bitI=B``;
    attributes that already name a bit (``clearance:bit3=0``) are kept.
    """
    expanded = set()
    for raw in attrs:
        attr = canonical_attribute(raw)
        match = _NUMERIC_RE.fullmatch(attr)
        if match and not _BIT_RE.match(match.group("name")):
            expanded |= numeric_attributes(match.group("name"),
                                           int(match.group("value")), width)
        else:
            expanded.add(attr)
    return frozenset(expanded)


@dataclass(frozen=True)
class Leaf:
    attribute: str


@dataclass(frozen=True)
class Gate:
    k: int
    children: Tuple["Node", ...]

    def __post_init__(self) -> None:
        n = len(self.children)
        if not 1 <= n <= 255:
            raise AbeError(f"gate arity {n} out of range")
        if not 1 <= self.k <= n:
            raise AbeError(f"threshold {self.k} invalid for {n} children")


Node = Union[Gate, Leaf]


def _render(node: Node) -> str:
    if isinstance(node, Leaf):
        return node.attribute
    parts = [_render(child) for child in node.children]
    if len(parts) == 1 and node.k == 1:
        return parts[0]
    if node.k == len(parts):
        return "(" + " AND ".join(parts) + ")"
    if node.k == 1:
        return "(" + " OR ".join(parts) + ")"
    return f"{node.k} of (" + ", ".join(parts) + ")"


def _encode_node(node: Node, out: bytearray) -> None:
    if isinstance(node, Leaf):
        name = node.attribute.encode("utf-8")
        out += struct.pack(">BH", LEAF_TAG, len(name)) + name
    else:
        out += struct.pack(">BBB", GATE_TAG, node.k, len(node.children))
        for child in node.children:
            _encode_node(child, out)


def _decode_node(data: bytes, offset: int, depth: int = 0) -> Tuple[Node, int]:
    if depth > MAX_TREE_DEPTH:
        raise AbeError("access tree too deep")
    try:
        tag = data[offset]
        if tag == LEAF_TAG:
            (length,) = struct.unpack_from(">H", data, offset + 1)
            start = offset + 3
            if start + length > len(data):
                raise AbeError("truncated leaf")
            name = data[start:start + length].decode("utf-8")
            return Leaf(canonical_attribute(name)), start + length
        if tag == GATE_TAG:
            k, n = struct.unpack_from(">BB", data, offset + 1)
            offset += 3
            children = []
            for _ in range(n):
                child, offset = _decode_node(data, offset, depth + 1)
                children.append(child)
            return Gate(k, tuple(children)), offset
    except (IndexError, struct.error, UnicodeDecodeError) as e:
        raise AbeError(f"malformed access tree: {e}")
    raise AbeError(f"unknown tree node tag {tag:#x}")


def _leaf_count(node: Node) -> int:
    if isinstance(node, Leaf):
        return 1
    return sum(_leaf_count(child) for child in node.children)


@dataclass(frozen=True)
class AccessTree:
    root: Node

    def leaves(self) -> List[Leaf]:
        found: List[Leaf] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                found.append(node)
            else:
                stack.extend(reversed(node.children))
        return found

    def attributes(self) -> FrozenSet[str]:
        return frozenset(leaf.attribute for leaf in self.leaves())

    def to_bytes(self) -> bytes:
        out = bytearray()
        _encode_node(self.root, out)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "AccessTree":
        root, end = _decode_node(data, 0)
        if end != len(data):
            raise AbeError("trailing bytes after access tree")
        return cls(root)

    def __str__(self) -> str:
        return _render(self.root)


# ----------------------------------------------------------------------
# numeric comparisons as bag-of-bits subtrees

_TRUE = object()
_FALSE = object()


def _and(a: Any, b: Any) -> Any:
    if a is _FALSE or b is _FALSE:
        return _FALSE
    if a is _TRUE:
        return b
    if b is _TRUE:
        return a
    return Gate(2, (a, b))


def _or(a: Any, b: Any) -> Any:
    if a is _TRUE or b is _TRUE:
        return _TRUE
    if a is _FALSE:
        return b
    if b is _FALSE:
        return a
    return Gate(1, (a, b))


def _bit(name: str, i: int, value: int) -> Leaf:
    return Leaf(f"{name}:bit{i}={value}")


def compile_comparison(name: str, cmp: str, k: int,
                       width: int = DEFAULT_WIDTH) -> Node:
    """ Compile ``name cmp k`` into a tree over ``name:bitI=B`` leaves.

    A value compiled with numeric_attributes satisfies the returned
    subtree exactly when the integer comparison holds.
    """
    if cmp not in COMPARATORS:
        raise AbeError(f"unknown comparator {cmp!r}")
    if not 0 <= k < 2 ** width:
        raise AbeError(f"comparison value {k} outside {width}-bit range")
    name = canonical_attribute(name)

    if cmp == "==":
        return Gate(width, tuple(_bit(name, i, (k >> i) & 1)
                                 for i in reversed(range(width))))

    # fold from the least significant bit up; acc decides the comparison
    # over bits below i when all higher bits are equal
    greater = cmp in (">", ">=")
    acc = _TRUE if cmp in (">=", "<=") else _FALSE
    for i in range(width):
        k_bit = (k >> i) & 1
        if greater:
            leaf = _bit(name, i, 1)
            acc = _and(leaf, acc) if k_bit else _or(leaf, acc)
        else:
            leaf = _bit(name, i, 0)
            acc = _or(leaf, acc) if k_bit else _and(leaf, acc)

    if acc is _TRUE:
        return Gate(1, (_bit(name, 0, 0), _bit(name, 0, 1)))
    if acc is _FALSE:
        # one value carries exactly one of these two, never both
        return Gate(2, (_bit(name, 0, 0), _bit(name, 0, 1)))
    return acc


# ----------------------------------------------------------------------
# policy language

_TOKEN_RE = re.compile(
    r"(?P<lparen>\()|(?P<rparen>\))|(?P<comma>,)"
    r"|(?P<cmp><=|>=|==|<|>)"
    r"|(?P<word>[^\s(),<>=]+(?:=[^\s(),<>=]+)?)")
_KEYWORDS = ("AND", "OR", "OF")


def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise PolicySyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = match.lastgroup or ""
        value = match.group(kind)
        if kind == "word" and value.upper() in _KEYWORDS:
            kind = value.upper()
        tokens.append((kind, value, pos))
        pos = match.end()
    return tokens


class _PolicyParser:
    def __init__(self, text: str, width: int) -> None:
        self.text = text
        self.width = width
        self.tokens = _tokenize(text)
        self.index = 0

    def peek(self) -> Optional[Tuple[str, str, int]]:
        if self.index < len(self.tokens):
            return self.tokens[self.index]
        return None

    def next(self, expected: str = "") -> Tuple[str, str, int]:
        token = self.peek()
        if token is None:
            raise PolicySyntaxError("unexpected end of policy", len(self.text))
        if expected and token[0] != expected:
            raise PolicySyntaxError(f"expected {expected}, found {token[1]!r}",
                                    token[2])
        self.index += 1
        return token

    def parse(self) -> AccessTree:
        if not self.tokens:
            raise PolicySyntaxError("empty policy", 0)
        root = self.expr()
        token = self.peek()
        if token is not None:
            raise PolicySyntaxError(f"unexpected {token[1]!r}", token[2])
        return AccessTree(root)

    def expr(self) -> Node:
        terms = [self.term()]
        while self.peek() is not None and self.peek()[0] == "OR":
            self.next()
            terms.append(self.term())
        return terms[0] if len(terms) == 1 else Gate(1, tuple(terms))

    def term(self) -> Node:
        factors = [self.factor()]
        while self.peek() is not None and self.peek()[0] == "AND":
            self.next()
            factors.append(self.factor())
        if len(factors) == 1:
            return factors[0]
        return Gate(len(factors), tuple(factors))

    def factor(self) -> Node:
        kind, value, pos = self.next()
        if kind == "lparen":
            node = self.expr()
            self.next("rparen")
            return node
        if kind != "word":
            raise PolicySyntaxError(f"unexpected {value!r}", pos)

        following = self.peek()
        if following is not None and following[0] == "OF" and value.isdigit():
            return self.threshold(int(value), pos)
        if following is not None and following[0] == "cmp":
            return self.comparison(value, pos)
        try:
            return Leaf(canonical_attribute(value))
        except AbeError as e:
            raise PolicySyntaxError(str(e), pos)

    def threshold(self, k: int, pos: int) -> Node:
        self.next("OF")
        self.next("lparen")
        children = [self.expr()]
        while self.peek() is not None and self.peek()[0] == "comma":
            self.next()
            children.append(self.expr())
        self.next("rparen")
        if not 1 <= k <= len(children):
            raise PolicySyntaxError(
                f"threshold {k} invalid for {len(children)} children", pos)
        return Gate(k, tuple(children))

    def comparison(self, name: str, pos: int) -> Node:
        _, cmp, _ = self.next("cmp")
        _, raw, value_pos = self.next("word")
        try:
            k = int(raw)
        except ValueError:
            raise PolicySyntaxError(f"expected integer, found {raw!r}",
                                    value_pos)
        if not 0 <= k < 2 ** self.width:
            raise PolicySyntaxError(
                f"comparison value {k} outside {self.width}-bit range",
                value_pos)
        return compile_comparison(name, cmp, k, self.width)


def parse_policy(text: str, width: int = DEFAULT_WIDTH) -> AccessTree:
    return _PolicyParser(text, width).parse()


def satisfies(attrs: Iterable[str], tree: Union[AccessTree, Node]) -> bool:
    held = attrs if isinstance(attrs, (set, frozenset)) else frozenset(attrs)
    node = tree.root if isinstance(tree, AccessTree) else tree
    if isinstance(node, Leaf):
        return node.attribute in held
    met = 0
    for child in node.children:
        if satisfies(held, child):
            met += 1
            if met >= node.k:
                return True
    return False


# ----------------------------------------------------------------------
# group helpers

def make_rng(seed: Optional[int] = None) -> Rng:
    if seed is None:
        return secrets.SystemRandom()
    return random.Random(seed)


def random_bytes(rng: Rng, n: int) -> bytes:
    return rng.getrandbits(8 * n).to_bytes(n, "big")


def _random_scalar(rng: Rng) -> int:
    return rng.randrange(1, curve_order)


def _mul(pt: Point, n: int) -> Point:
    return multiply(pt, n % curve_order)


@functools.lru_cache(maxsize=4096)
def hash_attribute(attribute: str) -> Point:
    return hash_to_G1(attribute.encode("utf-8"), ATTR_DST, hashlib.sha256)


def lagrange_coefficient(i: int, indices: Iterable[int], x: int = 0) -> int:
    num, den = 1, 1
    for j in indices:
        if j == i:
            continue
        num = num * (x - j) % curve_order
        den = den * (i - j) % curve_order
    return num * pow(den, -1, curve_order) % curve_order


def _g1_to_bytes(pt: Point) -> bytes:
    return compress_G1(pt).to_bytes(G1_BYTES, "big")


def _g2_to_bytes(pt: Point) -> bytes:
    z1, z2 = compress_G2(pt)
    return z1.to_bytes(G1_BYTES, "big") + z2.to_bytes(G1_BYTES, "big")


def _g1_from_bytes(data: bytes) -> Point:
    try:
        return decompress_G1(int.from_bytes(data, "big"))
    except (ValueError, AssertionError) as e:
        raise InvalidGroupElement(f"bad G1 encoding: {e}")


def _g2_from_bytes(data: bytes) -> Point:
    try:
        return decompress_G2((int.from_bytes(data[:G1_BYTES], "big"),
                              int.from_bytes(data[G1_BYTES:], "big")))
    except (ValueError, AssertionError) as e:
        raise InvalidGroupElement(f"bad G2 encoding: {e}")


def gt_to_bytes(x: FQ12) -> bytes:
    return b"".join((int(getattr(c, "n", c)) % field_modulus).to_bytes(48, "big")
                    for c in x.coeffs)


def _gt_from_bytes(data: bytes) -> FQ12:
    coeffs = [int.from_bytes(data[i:i + 48], "big")
              for i in range(0, GT_BYTES, 48)]
    if any(c >= field_modulus for c in coeffs):
        raise InvalidGroupElement("GT coefficient out of range")
    return FQ12(coeffs)


def _check_gt(x: FQ12, label: str) -> None:
    if gt_to_bytes(x ** curve_order) != gt_to_bytes(FQ12.one()):
        raise InvalidGroupElement(f"{label} is outside the order-r subgroup of GT")


def _check_point(pt: Point, curve_b: Any, label: str,
                 allow_identity: bool = False) -> None:
    if is_inf(pt):
        if allow_identity:
            return
        raise InvalidGroupElement(f"{label} is the identity")
    if not is_on_curve(pt, curve_b):
        raise InvalidGroupElement(f"{label} is not on the curve")
    if not is_inf(multiply(pt, curve_order)):
        raise InvalidGroupElement(f"{label} is outside the prime-order subgroup")


def _take(data: bytes, offset: int, n: int) -> Tuple[bytes, int]:
    if offset + n > len(data):
        raise AbeError("truncated encoding")
    return data[offset:offset + n], offset + n


def dem_key(element: FQ12) -> bytes:
    return hashlib.sha256(gt_to_bytes(element) + DEM_TAG).digest()[:32]


# ----------------------------------------------------------------------
# key material and ciphertexts

@dataclass(frozen=True)
class PublicParams:
    g1: Point
    g2: Point
    h: Point
    egg_alpha: FQ12

    def to_bytes(self) -> bytes:
        return (bytes([PARAMS_VERSION]) + _g1_to_bytes(self.g1)
                + _g2_to_bytes(self.g2) + _g1_to_bytes(self.h)
                + gt_to_bytes(self.egg_alpha))

    @classmethod
    def from_bytes(cls, data: bytes, validate: bool = True) -> "PublicParams":
        if len(data) != 1 + 2 * G1_BYTES + G2_BYTES + GT_BYTES:
            raise AbeError("public params have the wrong length")
        if data[0] != PARAMS_VERSION:
            raise AbeError(f"unsupported params version {data[0]}")
        offset = 1
        raw_g1, offset = _take(data, offset, G1_BYTES)
        raw_g2, offset = _take(data, offset, G2_BYTES)
        raw_h, offset = _take(data, offset, G1_BYTES)
        params = cls(_g1_from_bytes(raw_g1), _g2_from_bytes(raw_g2),
                     _g1_from_bytes(raw_h), _gt_from_bytes(data[offset:]))
        if validate:
            params.validate()
        return params

    def validate(self) -> None:
        _check_point(self.g1, b, "g1")
        _check_point(self.g2, b2, "g2")
        _check_point(self.h, b, "h")
        if gt_to_bytes(self.egg_alpha) == gt_to_bytes(FQ12.one()):
            raise InvalidGroupElement("pairing constant is the identity")
        _check_gt(self.egg_alpha, "pairing constant")


@dataclass(frozen=True)
class MasterKey:
    beta: int
    g2_alpha: Point

    def __repr__(self) -> str:
        return "MasterKey(<secret>)"

    def to_bytes(self) -> bytes:
        return (bytes([KEY_VERSION]) + self.beta.to_bytes(SCALAR_BYTES, "big")
                + _g2_to_bytes(self.g2_alpha))

    @classmethod
    def from_bytes(cls, data: bytes) -> "MasterKey":
        if len(data) != 1 + SCALAR_BYTES + G2_BYTES or data[0] != KEY_VERSION:
            raise AbeError("malformed master key")
        beta = int.from_bytes(data[1:1 + SCALAR_BYTES], "big")
        if not 0 < beta < curve_order:
            raise AbeError("master key scalar out of range")
        g2_alpha = _g2_from_bytes(data[1 + SCALAR_BYTES:])
        _check_point(g2_alpha, b2, "g2^alpha")
        return cls(beta, g2_alpha)


def check_master_key(params: PublicParams, msk: MasterKey) -> bool:
    """ e(g1, g2^alpha) must equal the published pairing constant. """
    derived = pairing(msk.g2_alpha, params.g1)
    return gt_to_bytes(derived) == gt_to_bytes(params.egg_alpha)


@dataclass(frozen=True)
class UserSecretKey:
    d: Point
    components: Mapping[str, Tuple[Point, Point]]

    @property
    def attributes(self) -> FrozenSet[str]:
        return frozenset(self.components)

    def to_bytes(self) -> bytes:
        out = bytearray([KEY_VERSION])
        out += _g2_to_bytes(self.d)
        out += struct.pack(">H", len(self.components))
        for attr in sorted(self.components):
            name = attr.encode("utf-8")
            d_j, d_j_prime = self.components[attr]
            out += struct.pack(">H", len(name)) + name
            out += _g1_to_bytes(d_j) + _g2_to_bytes(d_j_prime)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes, validate: bool = True) -> "UserSecretKey":
        if not data or data[0] != KEY_VERSION:
            raise AbeError("malformed user key")
        raw_d, offset = _take(data, 1, G2_BYTES)
        raw_count, offset = _take(data, offset, 2)
        (count,) = struct.unpack(">H", raw_count)
        components: Dict[str, Tuple[Point, Point]] = {}
        for _ in range(count):
            raw_len, offset = _take(data, offset, 2)
            (length,) = struct.unpack(">H", raw_len)
            raw_name, offset = _take(data, offset, length)
            raw_dj, offset = _take(data, offset, G1_BYTES)
            raw_djp, offset = _take(data, offset, G2_BYTES)
            components[raw_name.decode("utf-8")] = (_g1_from_bytes(raw_dj),
                                                    _g2_from_bytes(raw_djp))
        if offset != len(data):
            raise AbeError("trailing bytes after user key")
        key = cls(_g2_from_bytes(raw_d), components)
        if validate:
            key.validate()
        return key

    def validate(self) -> None:
        _check_point(self.d, b2, "D")
        for attr, (d_j, d_j_prime) in self.components.items():
            _check_point(d_j, b, f"D[{attr}]")
            _check_point(d_j_prime, b2, f"D'[{attr}]")


@dataclass(frozen=True)
class AbeCiphertext:
    tree: AccessTree
    c_tilde: FQ12
    c: Point
    leaf_components: Tuple[Tuple[Point, Point], ...]
    nonce: bytes
    dem: bytes

    def to_bytes(self) -> bytes:
        out = bytearray([CT_VERSION])
        out += self.tree.to_bytes()
        out += gt_to_bytes(self.c_tilde)
        out += _g1_to_bytes(self.c)
        for c_y, c_y_prime in self.leaf_components:
            out += _g2_to_bytes(c_y) + _g1_to_bytes(c_y_prime)
        out += self.nonce + self.dem
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "AbeCiphertext":
        if not data or data[0] != CT_VERSION:
            raise AbeError("unsupported ciphertext version")
        root, offset = _decode_node(data, 1)
        tree = AccessTree(root)
        raw_ct, offset = _take(data, offset, GT_BYTES)
        raw_c, offset = _take(data, offset, G1_BYTES)
        components = []
        for _ in range(_leaf_count(root)):
            raw_cy, offset = _take(data, offset, G2_BYTES)
            raw_cyp, offset = _take(data, offset, G1_BYTES)
            components.append((_g2_from_bytes(raw_cy), _g1_from_bytes(raw_cyp)))
        nonce, offset = _take(data, offset, NONCE_BYTES)
        dem = data[offset:]
        if len(dem) < 16:
            raise AbeError("truncated DEM ciphertext")
        c_tilde = _gt_from_bytes(raw_ct)
        _check_gt(c_tilde, "C~")
        return cls(tree, c_tilde, _g1_from_bytes(raw_c), tuple(components),
                   nonce, dem)


def _aad(tree: AccessTree) -> bytes:
    return bytes([CT_VERSION]) + tree.to_bytes()


# ----------------------------------------------------------------------
# scheme

def setup(security_level: int = DEFAULT_SECURITY_BITS,
          rng_seed: Optional[int] = None) -> Tuple[PublicParams, MasterKey]:
    if not MIN_SECURITY_BITS <= security_level <= MAX_SECURITY_BITS:
        raise UnsupportedSecurityLevel(
            f"{security_level}-bit security is not offered by BLS12-381")
    rng = make_rng(rng_seed)
    alpha = _random_scalar(rng)
    beta = _random_scalar(rng)
    g2_alpha = _mul(G2, alpha)
    params = PublicParams(G1, G2, _mul(G1, beta), pairing(g2_alpha, G1))
    logger.info("generated BLS12-381 parameters (%d-bit level)",
                security_level)
    return params, MasterKey(beta, g2_alpha)


def keygen(msk: MasterKey, params: PublicParams, attrs: Iterable[str],
           rng: Rng, width: int = DEFAULT_WIDTH) -> UserSecretKey:
    attributes = expand_attributes(attrs, width)
    if not attributes:
        raise AbeError("cannot issue a key for an empty attribute set")
    r = _random_scalar(rng)
    beta_inv = pow(msk.beta, -1, curve_order)
    d = _mul(add(msk.g2_alpha, _mul(params.g2, r)), beta_inv)
    g1_r = _mul(params.g1, r)
    components = {}
    for attr in sorted(attributes):
        r_j = _random_scalar(rng)
        components[attr] = (add(g1_r, _mul(hash_attribute(attr), r_j)),
                            _mul(params.g2, r_j))
    return UserSecretKey(d, components)


def _share(node: Node, secret: int, rng: Rng, out: List[int]) -> None:
    if isinstance(node, Leaf):
        out.append(secret)
        return
    coeffs = [secret] + [_random_scalar(rng) for _ in range(node.k - 1)]
    for index, child in enumerate(node.children, 1):
        share = 0
        for power, coeff in enumerate(coeffs):
            share = (share + coeff * pow(index, power, curve_order)) % curve_order
        _share(child, share, rng, out)


def encrypt(params: PublicParams, tree: AccessTree, payload: bytes,
            rng: Rng) -> AbeCiphertext:
    if len(payload) > MAX_PAYLOAD:
        raise AbeError(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    s = _random_scalar(rng)
    shares: List[int] = []
    _share(tree.root, s, rng, shares)

    z = _random_scalar(rng)
    blind = params.egg_alpha ** z
    c_tilde = params.egg_alpha ** ((z + s) % curve_order)

    components = tuple((_mul(params.g2, q), _mul(hash_attribute(leaf.attribute), q))
                       for leaf, q in zip(tree.leaves(), shares))
    nonce = random_bytes(rng, NONCE_BYTES)
    dem = AESGCM(dem_key(blind)).encrypt(nonce, payload, _aad(tree))
    return AbeCiphertext(tree, c_tilde, _mul(params.h, s), components,
                         nonce, dem)


def _recovery_plan(node: Node, attrs: FrozenSet[str], first_leaf: int,
                   weight: int, plan: List[Tuple[int, int]]) -> None:
    if isinstance(node, Leaf):
        plan.append((first_leaf, weight))
        return
    offsets = []
    position = first_leaf
    for child in node.children:
        offsets.append(position)
        position += _leaf_count(child)
    # smallest satisfiable index subset of size k
    chosen = [i for i, child in enumerate(node.children, 1)
              if satisfies(attrs, child)][:node.k]
    for i in chosen:
        coeff = lagrange_coefficient(i, chosen)
        _recovery_plan(node.children[i - 1], attrs, offsets[i - 1],
                       weight * coeff % curve_order, plan)


def decrypt(params: PublicParams, key: UserSecretKey,
            ct: AbeCiphertext) -> bytes:
    attrs = key.attributes
    if not satisfies(attrs, ct.tree):
        raise PolicyNotSatisfied("attributes do not satisfy the access tree")
    leaves = ct.tree.leaves()
    if len(leaves) != len(ct.leaf_components):
        raise AbeError("ciphertext leaf components do not match its tree")

    plan: List[Tuple[int, int]] = []
    _recovery_plan(ct.tree.root, attrs, 0, 1, plan)

    # C~ * e(g,g)^{rs} / e(C, D), accumulated before one final exponentiation
    acc = pairing(key.d, neg(ct.c), final_exponentiate=False)
    for position, weight in plan:
        d_j, d_j_prime = key.components[leaves[position].attribute]
        c_y, c_y_prime = ct.leaf_components[position]
        acc = acc * pairing(c_y, _mul(d_j, weight), final_exponentiate=False)
        acc = acc * pairing(d_j_prime, _mul(neg(c_y_prime), weight),
                            final_exponentiate=False)
    blind = ct.c_tilde * final_exponentiate(acc)

    try:
        return AESGCM(dem_key(blind)).decrypt(ct.nonce, ct.dem, _aad(ct.tree))
    except InvalidTag:
        raise IntegrityFailure("DEM authentication tag mismatch")
