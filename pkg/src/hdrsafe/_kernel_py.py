"""Pure-Python denotation kernel.

Evaluates a header type that has been compiled to postfix code. The code is a
flat sequence of ints: OP_ZERO, OP_ONE, (OP_INST, bit), OP_CAT, OP_ALT. The
result is the sorted list of alternatives, each one a bitmask of instances.
"""

OP_ZERO = 0
OP_ONE = 1
OP_INST = 2
OP_CAT = 3
OP_ALT = 4


class DenotationTooLarge(Exception):
    """Raised when a denotation would exceed the alternative cap."""

    def __init__(self, size, cap):
        super().__init__(f"denotation has more than {cap} alternatives ({size})")
        self.size = size
        self.cap = cap


def eval_code(code, cap):
    stack = []
    i = 0
    n = len(code)
    while i < n:
        op = code[i]
        if op == OP_ZERO:
            stack.append(set())
        elif op == OP_ONE:
            stack.append({0})
        elif op == OP_INST:
            i += 1
            stack.append({1 << code[i]})
        elif op == OP_CAT:
            right = stack.pop()
            left = stack.pop()
            if len(left) * len(right) > cap * 64:
                raise DenotationTooLarge(len(left) * len(right), cap)
            out = {a | b for a in left for b in right}
            if len(out) > cap:
                raise DenotationTooLarge(len(out), cap)
            stack.append(out)
        elif op == OP_ALT:
            right = stack.pop()
            left = stack.pop()
            left |= right
            if len(left) > cap:
                raise DenotationTooLarge(len(left), cap)
            stack.append(left)
        else:
            raise ValueError(f"bad opcode {op}")
        i += 1
    if len(stack) != 1:
        raise ValueError("malformed code")
    return sorted(stack[0])
