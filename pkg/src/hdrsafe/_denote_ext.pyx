# cython: language_level=3, boundscheck=False, wraparound=False
# distutils: language = c++
"""Compiled denotation kernel for universes of at most 64 instances."""

from libc.stdint cimport uint64_t
from libcpp.vector cimport vector
from libcpp.algorithm cimport sort, unique
from libcpp.utility cimport move

from hdrsafe._kernel_py import DenotationTooLarge

cdef enum:
    OP_ZERO = 0
    OP_ONE = 1
    OP_INST = 2
    OP_CAT = 3
    OP_ALT = 4


cdef inline void _canon(vector[uint64_t]& v, int width, vector[char]& seen):
    # dense results over a small universe: a bitmap dedupes and orders in
    # linear time; otherwise sort
    cdef size_t span, j, n = v.size()
    if width <= 24:
        span = (<size_t>1) << width
        if span <= 8 * n:
            seen.assign(span, 0)
            for j in range(n):
                seen[v[j]] = 1
            v.clear()
            for j in range(span):
                if seen[j]:
                    v.push_back(j)
            return
    sort(v.begin(), v.end())
    v.erase(unique(v.begin(), v.end()), v.end())


def eval_code(code, Py_ssize_t cap):
    cdef vector[long] ops = code
    cdef vector[vector[uint64_t]] stack
    cdef vector[uint64_t] left, right, out
    cdef Py_ssize_t i = 0, n = ops.size(), j, k
    cdef long op
    cdef int width = 0
    cdef vector[char] seen
    # universe width, for choosing how to dedupe
    j = 0
    while j < n:
        if ops[j] == OP_INST and j + 1 < n:
            j += 1
            if ops[j] >= 64:
                raise ValueError("instance index out of range for native kernel")
            if ops[j] + 1 > width:
                width = ops[j] + 1
        j += 1
    while i < n:
        op = ops[i]
        if op == OP_ZERO:
            stack.push_back(vector[uint64_t]())
        elif op == OP_ONE:
            stack.push_back(vector[uint64_t](1, 0))
        elif op == OP_INST:
            i += 1
            if ops[i] >= 64:
                raise ValueError("instance index out of range for native kernel")
            stack.push_back(vector[uint64_t](1, (<uint64_t>1) << ops[i]))
        elif op == OP_CAT:
            right.swap(stack.back())
            stack.pop_back()
            left.swap(stack.back())
            stack.pop_back()
            if <double>left.size() * <double>right.size() > <double>cap * 64:
                raise DenotationTooLarge(left.size() * right.size(), cap)
            out.clear()
            out.reserve(left.size() * right.size())
            for j in range(<Py_ssize_t>left.size()):
                for k in range(<Py_ssize_t>right.size()):
                    out.push_back(left[j] | right[k])
            _canon(out, width, seen)
            if <Py_ssize_t>out.size() > cap:
                raise DenotationTooLarge(out.size(), cap)
            stack.push_back(move(out))
            out = vector[uint64_t]()
        elif op == OP_ALT:
            right.swap(stack.back())
            stack.pop_back()
            left.swap(stack.back())
            stack.pop_back()
            left.insert(left.end(), right.begin(), right.end())
            _canon(left, width, seen)
            if <Py_ssize_t>left.size() > cap:
                raise DenotationTooLarge(left.size(), cap)
            stack.push_back(move(left))
            left = vector[uint64_t]()
        else:
            raise ValueError(f"bad opcode {op}")
        i += 1
    if stack.size() != 1:
        raise ValueError("malformed code")
    return stack.back()
